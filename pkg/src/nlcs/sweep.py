"""Parameter sweeps for the figure datasets and the verification suite."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NLCSError
from .fock import DEFAULT_TOL, canonical_commutator_check, displacement_apply
from .nonclassicality import (
    CLOSED_FORM_KINDS,
    CSV_COLUMNS,
    NonclassicalityReport,
    evaluate,
    moments_closed_form,
    moment_state,
    moments_oracle,
    report_row,
)
from .nonlinearity import combined_nonlinearity, get_model
from .states import (
    GK_KINDS,
    KINDS,
    StateSpec,
    build_combination_s1,
    build_dual,
    build_gk_dual,
    build_gkcs,
    build_nlcs,
    build_state,
    canonical_coherent,
    overlap_closed_form,
)

CRITERIA = ("g2", "I1", "I2", "I3", "I4")
HYDROGEN_KINDS = ("nlcs", "dual", "combination-s1", "superposition-s2")
GK_FIGURE_KINDS = ("gk", "gk-dual", "gk-combination-s1")


class ConfigError(ValueError):
    """Invalid sweep configuration."""


@dataclass(frozen=True)
class Grid:
    min: float
    max: float
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 2:
            raise ConfigError(f"grid needs at least 2 steps, got {self.steps!r}")
        if not (math.isfinite(self.min) and math.isfinite(self.max)) or self.min >= self.max:
            raise ConfigError(f"grid bounds must satisfy min < max, got [{self.min}, {self.max}]")

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, int(self.steps))

    @classmethod
    def from_dict(cls, d) -> "Grid":
        try:
            return cls(float(d["min"]), float(d["max"]), int(d["steps"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad grid {d!r}: {exc}") from None

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "steps": self.steps}


@dataclass(frozen=True)
class SweepConfig:
    """One figure's worth of sweep: model, state kinds, criteria and grids.

    GK kinds need either a fixed ``gamma`` or a ``gamma_grid``.
    """

    name: str
    model: str
    kinds: tuple[str, ...]
    amplitude_grid: Grid
    criteria: tuple[str, ...] = CRITERIA
    gamma_grid: Grid | None = None
    gamma: float | None = None
    lam: float | None = None
    kappa: float | None = None
    trunc_tol: float = DEFAULT_TOL
    source: str = "auto"
    output_format: str = "csv"
    output_path: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(self, "criteria", tuple(self.criteria))
        if not self.kinds:
            raise ConfigError("at least one state kind is required")
        for kind in self.kinds:
            if kind not in KINDS:
                raise ConfigError(f"unknown state kind {kind!r}")
        for crit in self.criteria:
            if crit not in CRITERIA:
                raise ConfigError(f"unknown criterion {crit!r}; choose from {CRITERIA}")
        if any(k in GK_KINDS for k in self.kinds):
            if (self.gamma is None) == (self.gamma_grid is None):
                raise ConfigError("GK kinds need exactly one of 'gamma' or 'gamma_grid'")
            if self.gamma == 0:
                raise ConfigError("gamma must be nonzero")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.source not in ("auto", "oracle", "closed-form"):
            raise ConfigError(f"unknown moment source {self.source!r}")
        if not self.trunc_tol > 0:
            raise ConfigError("trunc_tol must be positive")
        try:
            get_model(self.model, self.lam, self.kappa)
        except (KeyError, OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def gammas(self) -> list[float | None]:
        if self.gamma_grid is not None:
            return [float(g) for g in self.gamma_grid.values()]
        return [self.gamma]

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        try:
            out = d.get("output") or {}
            return cls(
                name=d.get("name", "sweep"),
                model=d["model"],
                kinds=tuple(d["kinds"]),
                amplitude_grid=Grid.from_dict(d["amplitude_grid"]),
                criteria=tuple(d.get("criteria", CRITERIA)),
                gamma_grid=Grid.from_dict(d["gamma_grid"]) if d.get("gamma_grid") else None,
                gamma=d.get("gamma"),
                lam=d.get("lambda"),
                kappa=d.get("kappa"),
                trunc_tol=float(d.get("trunc_tol", DEFAULT_TOL)),
                source=d.get("source", "auto"),
                output_format=out.get("format", "csv"),
                output_path=out.get("path"),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config field {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "model": self.model,
            "kinds": list(self.kinds),
            "criteria": list(self.criteria),
            "amplitude_grid": self.amplitude_grid.to_dict(),
            "gamma_grid": self.gamma_grid.to_dict() if self.gamma_grid else None,
            "gamma": self.gamma,
            "lambda": self.lam,
            "kappa": self.kappa,
            "trunc_tol": self.trunc_tol,
            "source": self.source,
            "output": {"path": self.output_path, "format": self.output_format},
        }


ALPHA_GRID = Grid(0.01, 0.95, 200)
Z_GRID_1D = Grid(0.01, 0.95, 200)
Z_GRID_2D = Grid(0.01, 0.95, 80)
GAMMA_GRID = Grid(0.1, 2 * math.pi, 80)

PRESETS = {
    "fig1": SweepConfig("fig1", "hydrogen", HYDROGEN_KINDS, ALPHA_GRID, ("g2",)),
    "fig2": SweepConfig("fig2", "hydrogen", HYDROGEN_KINDS, ALPHA_GRID, ("I1", "I2")),
    "fig3": SweepConfig("fig3", "hydrogen", HYDROGEN_KINDS, ALPHA_GRID, ("I3", "I4")),
    "fig4": SweepConfig("fig4", "poschl-teller", GK_FIGURE_KINDS, Z_GRID_1D, ("g2",),
                        gamma=0.5, lam=4.0, kappa=4.0),
    "fig5": SweepConfig("fig5", "poschl-teller", GK_FIGURE_KINDS, Z_GRID_2D, ("I1", "I2"),
                        gamma_grid=GAMMA_GRID, lam=4.0, kappa=4.0),
    "fig6": SweepConfig("fig6", "poschl-teller", GK_FIGURE_KINDS, Z_GRID_2D, ("I3", "I4"),
                        gamma_grid=GAMMA_GRID, lam=4.0, kappa=4.0),
}


def _evaluate_point(task):
    kind, model, amp, gamma, lam, kappa, tol, source = task
    try:
        spec = StateSpec(kind, model, amp, gamma if kind in GK_KINDS else None, lam, kappa)
        report = evaluate(spec, source=source, tol=tol)
    except NLCSError:
        report = None
    return report_row(report, amp, gamma if kind in GK_KINDS else None)


def compute_sweep(config: SweepConfig, workers: int = 1) -> dict[str, list[dict]]:
    """Rows for every kind, amplitude-major then gamma, independent of ``workers``."""
    tasks = []
    for kind in config.kinds:
        gammas = config.gammas() if kind in GK_KINDS else [None]
        for amp in config.amplitude_grid.values():
            for gamma in gammas:
                tasks.append((kind, config.model, float(amp), gamma, config.lam,
                              config.kappa, config.trunc_tol, config.source))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate_point, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        rows = [_evaluate_point(t) for t in tasks]
    out: dict[str, list[dict]] = {k: [] for k in config.kinds}
    for task, row in zip(tasks, rows):
        out[task[0]].append(row)
    return out


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def _json_safe(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def write_sweep(config: SweepConfig, results: dict[str, list[dict]], out_dir) -> list[Path]:
    """One table per (kind, criterion) plus a ``config.json`` sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for kind, rows in results.items():
        for crit in config.criteria:
            path = out_dir / f"{kind}_{crit}.{config.output_format}"
            if config.output_format == "csv":
                path.write_text(rows_to_csv(rows))
            else:
                payload = {
                    "preset": config.name, "kind": kind, "criterion": crit,
                    "columns": list(CSV_COLUMNS),
                    "rows": [{k: _json_safe(r[k]) for k in CSV_COLUMNS} for r in rows],
                }
                path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
            written.append(path)
    sidecar = out_dir / "config.json"
    sidecar.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    written.append(sidecar)
    return written


def run_figure_sweep(config: SweepConfig, out_dir=None, workers: int = 1) -> list[Path]:
    out_dir = out_dir or config.output_path or Path("results") / config.name
    return write_sweep(config, compute_sweep(config, workers), out_dir)


# ---------------------------------------------------------------------------
# verification


@dataclass
class Check:
    name: str
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_deviation <= self.tolerance)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "max_deviation": self.max_deviation, "tolerance": self.tolerance}


def moment_allowance(x, y, rtol: float = 1e-8, atol: float = 1e-10) -> float:
    """Mismatch as a fraction of its allowance ``max(rtol * |x|, atol)``."""
    allowed = max(rtol * max(abs(x), abs(y)), atol)
    return abs(x - y) / allowed


def double_entry_deviation(spec: StateSpec, tol: float = DEFAULT_TOL) -> float:
    closed = moments_closed_form(spec, tol=tol)
    oracle = moments_oracle(moment_state(spec, tol))
    cv, ov = closed.values(), oracle.values()
    return max(moment_allowance(cv[k], ov[k]) for k in cv)


def _canonical_checks() -> list[Check]:
    alpha, z, gamma = 0.5, 0.5, 0.5
    coeff_dev, crit_dev = 0.0, 0.0
    for kind in KINDS:
        spec = StateSpec(kind, "identity", z if kind in GK_KINDS else alpha,
                         gamma if kind in GK_KINDS else None)
        state, _ = build_state(spec)
        amp = z * np.exp(-1j * gamma) if kind in GK_KINDS else alpha
        coeff_dev = max(coeff_dev, float(np.abs(state.coeffs - canonical_coherent(amp, state.dim)).max()))
        reports = [NonclassicalityReport.from_moments(moments_oracle(moment_state(spec)))]
        if kind in CLOSED_FORM_KINDS:
            reports.append(NonclassicalityReport.from_moments(moments_closed_form(spec)))
        for r in reports:
            crit_dev = max(crit_dev, abs(r.g2 - 1), abs(r.I1), abs(r.I2), abs(r.I3), abs(r.I4))
    return [Check("identity: canonical coefficients", coeff_dev, 1e-12),
            Check("identity: g2=1 and I1..I4=0", crit_dev, 1e-10)]


def _oracle_invariants(specs) -> list[Check]:
    reorder, heis = 0.0, 0.0
    for spec in specs:
        m = moments_oracle(moment_state(spec))
        reorder = max(reorder, abs(m.reordering_defect()))
        r = NonclassicalityReport.from_moments(m)
        heis = max(heis, 1 / 16 - r.heisenberg_product())
    return [Check(f"{specs[0].model}: bosonic reordering identity", reorder, 1e-9),
            Check(f"{specs[0].model}: Heisenberg floor (1/16 - VxVy)", heis, 1e-12)]


def _hydrogen_checks() -> list[Check]:
    s, f = get_model("hydrogen")
    checks = [Check("hydrogen: commutator [A,B†]=I interior block", canonical_commutator_check(f, 32), 1e-10)]
    fs = combined_nonlinearity(f)
    n = np.arange(101)
    lhs = fs.log_fact(n) + np.logaddexp(0.0, 2 * f.log_fact(n))
    rhs = np.log(2.0) + f.log_fact(n)
    checks.append(Check("hydrogen: telescoping of [f_s1(n)]!", float(np.abs(np.expm1(lhs - rhs)).max()), 1e-10))
    n = np.arange(1, 200)
    checks.append(Check("hydrogen: e_n = n f(n)^2",
                        float(np.abs(n * f(n) ** 2 / s.e(n) - 1).max()), 1e-12))
    dev = max(double_entry_deviation(StateSpec(kind, "hydrogen", a))
              for kind in ("combination-s1", "superposition-s2")
              for a in (0.1, 0.3, 0.5, 0.7, 0.9))
    checks.append(Check("hydrogen: closed-form vs oracle moments (fraction of allowance)", dev, 1.0))
    eq = 0.0
    for a in (0.2, 0.5):
        direct, _, c1, c2 = build_combination_s1(f, a, dim=64)
        nl, _ = build_nlcs(f, a, dim=64)
        du, _ = build_dual(f, a, dim=64)
        assembled = c1 * nl.coeffs + c2 * du.coeffs
        derived, _ = build_nlcs(fs, a, dim=64)
        disp = displacement_apply(fs, a, 64)
        routes = [direct.coeffs, assembled, derived.coeffs, disp.coeffs]
        eq = max(eq, max(float(np.abs(x - y).max()) for i, x in enumerate(routes) for y in routes[i + 1:]))
    checks.append(Check("hydrogen: four constructions of the combination agree", eq, 1e-8))
    nl, _ = build_nlcs(f, 0.5)
    du, _ = build_dual(f, 0.5)
    ov = abs(overlap_closed_form(("nlcs", "dual"), f=f, alpha=0.5) - nl.inner(du))
    checks.append(Check("hydrogen: dual-pair overlap closed form", ov, 1e-10))
    specs = [StateSpec(k, "hydrogen", a) for k in HYDROGEN_KINDS for a in (0.1, 0.5, 0.9)]
    return checks + _oracle_invariants(specs)


def _poschl_teller_checks() -> list[Check]:
    s, f = get_model("poschl-teller", 4.0, 4.0)
    checks = [Check("poschl-teller: commutator [A,B†]=I interior block", canonical_commutator_check(f, 32), 1e-10)]
    n = np.arange(1, 200)
    checks.append(Check("poschl-teller: e_n = n f(n)^2",
                        float(np.abs(n * f(n) ** 2 / s.e(n) - 1).max()), 1e-12))
    dev = max(double_entry_deviation(StateSpec("gk-combination-s1", "poschl-teller", z, g, 4.0, 4.0))
              for z in (0.2, 0.5, 0.8) for g in (0.5, 1.5))
    checks.append(Check("poschl-teller: GK-s1 closed-form vs oracle (fraction of allowance)", dev, 1.0))
    g, _ = build_gkcs(s, 0.5, 0.5)
    d, _ = build_gk_dual(s, 0.5, 0.5)
    ov = abs(overlap_closed_form(("gk", "gk-dual"), spectrum=s, alpha=0.5, gamma=0.5) - g.inner(d))
    checks.append(Check("poschl-teller: GK dual-pair overlap closed form", ov, 1e-10))
    specs = [StateSpec(k, "poschl-teller", z, 0.5, 4.0, 4.0) for k in GK_FIGURE_KINDS for z in (0.2, 0.8)]
    return checks + _oracle_invariants(specs)


VERIFY_MODELS = {
    "identity": _canonical_checks,
    "hydrogen": _hydrogen_checks,
    "poschl-teller": _poschl_teller_checks,
}


def verify(model: str | None = None) -> dict:
    """Run the invariant and double-entry suite; ``passed`` is False on any failure."""
    if model is not None and model not in VERIFY_MODELS:
        raise ConfigError(f"verify supports {sorted(VERIFY_MODELS)}, got {model!r}")
    names = [model] if model else list(VERIFY_MODELS)
    checks = []
    for name in names:
        try:
            checks.extend(VERIFY_MODELS[name]())
        except NLCSError as exc:
            checks.append(Check(f"{name}: {type(exc).__name__}: {exc}", math.inf, 0.0))
    return {"passed": all(c.passed for c in checks), "checks": [c.to_dict() for c in checks]}
