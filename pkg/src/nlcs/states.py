"""Builders for the seven state families.

Every builder returns the normalized truncated state together with the
normalization constant of the infinite series (``N`` such that the state is
``N * sum_n c_n |n>`` for the unnormalized coefficients ``c_n``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .fock import DEFAULT_TOL, FockState, amplitude_log_power, max_dim, series_state
from .nonlinearity import (
    NonlinearityFunction,
    SpectrumModel,
    _check_K,
    gk_K,
    get_model,
)

KINDS = (
    "nlcs",
    "dual",
    "combination-s1",
    "superposition-s2",
    "gk",
    "gk-dual",
    "gk-combination-s1",
)
GK_KINDS = frozenset({"gk", "gk-dual", "gk-combination-s1"})


@dataclass(frozen=True)
class StateSpec:
    """Serializable description of one state: family, model and parameters."""

    kind: str
    model: str
    alpha: complex
    gamma: float | None = None
    lam: float | None = None
    kappa: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown state kind {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "alpha", complex(self.alpha))
        if self.kind in GK_KINDS:
            if self.gamma is None or self.gamma == 0:
                raise DomainError(f"{self.kind} states need a nonzero gamma")

    @classmethod
    def from_dict(cls, data: dict) -> "StateSpec":
        amp = data.get("alpha", data.get("z"))
        if amp is None:
            raise ValueError("state spec needs an 'alpha' (or 'z') amplitude")
        if isinstance(amp, (list, tuple)):
            if len(amp) != 2:
                raise ValueError("complex amplitudes are written as [re, im]")
            amp = complex(amp[0], amp[1])
        return cls(
            kind=data["kind"],
            model=data["model"],
            alpha=complex(amp),
            gamma=data.get("gamma"),
            lam=data.get("lambda"),
            kappa=data.get("kappa"),
        )

    @classmethod
    def from_json(cls, text: str) -> "StateSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "model": self.model, "alpha": [self.alpha.real, self.alpha.imag]}
        if self.gamma is not None:
            out["gamma"] = self.gamma
        if self.lam is not None:
            out["lambda"] = self.lam
        if self.kappa is not None:
            out["kappa"] = self.kappa
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@lru_cache(maxsize=8)
def _cached_model(name, lam, kappa, cap):
    return get_model(name, lam, kappa)


def resolve_model(spec: StateSpec) -> tuple[SpectrumModel, NonlinearityFunction]:
    return _cached_model(spec.model, spec.lam, spec.kappa, max_dim())


def _half_lfact(n):
    return 0.5 * gammaln(np.asarray(n, dtype=float) + 1.0)


def _check_radius(amplitude, radius, what):
    if not abs(amplitude) < radius:
        raise DomainError(f"|{what}|={abs(amplitude):g} is not inside the domain radius {radius:g}")


def _norm_constant(log_norm_sq: float) -> float:
    return math.exp(-0.5 * log_norm_sq)


def _log_sum2(lm1, ph1, lm2, ph2):
    """``log|x1 + x2|`` and ``arg(x1 + x2)`` for ``x = exp(lm + i ph)``."""
    top = np.maximum(lm1, lm2)
    safe = np.where(np.isfinite(top), top, 0.0)
    z = np.exp(lm1 - safe + 1j * ph1) + np.exp(lm2 - safe + 1j * ph2)
    with np.errstate(divide="ignore"):
        return np.where(np.isfinite(top), safe + np.log(np.abs(z)), -np.inf), np.angle(z)


# ---------------------------------------------------------------------------
# nonlinear coherent states and their dual pair


def build_nlcs(f: NonlinearityFunction, alpha: complex, *, tol: float = DEFAULT_TOL,
               dim: int | None = None) -> tuple[FockState, float]:
    """Eigenstate of ``A = a f(n)``: coefficients ``alpha^n / (sqrt(n!) [f(n)]!)``."""
    _check_radius(alpha, f.amplitude_radius, "alpha")

    def lm(n):
        return amplitude_log_power(n, alpha)[0] - _half_lfact(n) - f.log_fact(n)

    def ph(n):
        return amplitude_log_power(n, alpha)[1] - f.phase_fact(n)

    state, lns = series_state(lm, ph, tol=tol, dim=dim, available=f.size)
    return state, _norm_constant(lns)


def build_dual(f: NonlinearityFunction, beta: complex, *, tol: float = DEFAULT_TOL,
               dim: int | None = None) -> tuple[FockState, float]:
    """Eigenstate of ``B = a / f(n)``: coefficients ``beta^n [f(n)]! / sqrt(n!)``."""
    _check_radius(beta, f.dual_amplitude_radius, "beta")

    def lm(n):
        return amplitude_log_power(n, beta)[0] - _half_lfact(n) + f.log_fact(n)

    def ph(n):
        return amplitude_log_power(n, beta)[1] + f.phase_fact(n)

    state, lns = series_state(lm, ph, tol=tol, dim=dim, available=f.size)
    return state, _norm_constant(lns)


def _require_real(f):
    if f.is_complex or np.any(f.values[1:] <= 0):
        raise DomainError("superpositions of the dual pair need a real positive f")


def build_combination(f: NonlinearityFunction, alpha: complex, beta: complex, *,
                      tol: float = DEFAULT_TOL, dim: int | None = None) -> tuple[FockState, float]:
    """First-kind combination of the unnormalized pair with separate amplitudes.

    Coefficients ``(alpha^n + beta^n [f(n)]!^2) / (sqrt(n!) [f(n)]!)``.
    """
    _require_real(f)
    _check_radius(alpha, f.amplitude_radius, "alpha")
    _check_radius(beta, f.dual_amplitude_radius, "beta")

    def parts(n):
        la, pa = amplitude_log_power(n, alpha)
        lb, pb = amplitude_log_power(n, beta)
        lf = f.log_fact(n)
        return _log_sum2(la - lf, pa, lb + lf, pb)

    def lm(n):
        return parts(n)[0] - _half_lfact(n)

    def ph(n):
        return parts(n)[1]

    state, lns = series_state(lm, ph, tol=tol, dim=dim, available=f.size)
    return state, _norm_constant(lns)


def build_combination_s1(f: NonlinearityFunction, alpha: complex, *, tol: float = DEFAULT_TOL,
                         dim: int | None = None) -> tuple[FockState, float, float, float]:
    """First-kind combination at equal amplitudes.

    Coefficients ``alpha^n (1 + [f(n)]!^2) / (sqrt(n!) [f(n)]!)``. Returns the
    state, ``N_s1`` and the weights ``c1 = N_s1/N_f``, ``c2 = N_s1/Ñ_f`` of the
    normalized nonlinear coherent state and its dual.
    """
    _require_real(f)
    _check_radius(alpha, min(f.amplitude_radius, f.dual_amplitude_radius), "alpha")

    def lm(n):
        lf = f.log_fact(n)
        return amplitude_log_power(n, alpha)[0] - _half_lfact(n) - lf + np.logaddexp(0.0, 2.0 * lf)

    def ph(n):
        return amplitude_log_power(n, alpha)[1]

    state, lns = series_state(lm, ph, tol=tol, dim=dim, available=f.size)
    n_s1 = _norm_constant(lns)
    _, n_f = build_nlcs(f, alpha, tol=tol)
    _, n_d = build_dual(f, alpha, tol=tol)
    return state, n_s1, n_s1 / n_f, n_s1 / n_d


def g_weights(f: NonlinearityFunction, alpha: complex, n, *, tol: float = DEFAULT_TOL):
    """``log G(n, |alpha|^2)`` with ``G = N_f + Ñ_f [f(n)]!^2``."""
    _, n_f = build_nlcs(f, alpha, tol=tol)
    _, n_d = build_dual(f, alpha, tol=tol)
    return np.logaddexp(math.log(n_f), math.log(n_d) + 2.0 * f.log_fact(n)), n_f, n_d


def build_superposition_s2(f: NonlinearityFunction, alpha: complex, *, tol: float = DEFAULT_TOL,
                           dim: int | None = None) -> tuple[FockState, float]:
    """Second-kind superposition of the two normalized members of the pair.

    Coefficients ``alpha^n G(n, |alpha|^2) / (sqrt(n!) [f(n)]!)``.
    """
    _require_real(f)
    _check_radius(alpha, min(f.amplitude_radius, f.dual_amplitude_radius), "alpha")
    _, n_f = build_nlcs(f, alpha, tol=tol)
    _, n_d = build_dual(f, alpha, tol=tol)
    log_nf, log_nd = math.log(n_f), math.log(n_d)

    def lm(n):
        lf = f.log_fact(n)
        log_g = np.logaddexp(log_nf, log_nd + 2.0 * lf)
        return amplitude_log_power(n, alpha)[0] - _half_lfact(n) - lf + log_g

    def ph(n):
        return amplitude_log_power(n, alpha)[1]

    state, lns = series_state(lm, ph, tol=tol, dim=dim, available=f.size)
    return state, _norm_constant(lns)


# ---------------------------------------------------------------------------
# Gazeau-Klauder states


def _check_gamma(gamma):
    if gamma is None or gamma == 0:
        raise DomainError("gamma must be a nonzero real number")


def build_gkcs(s: SpectrumModel, z: complex, gamma: float, *, tol: float = DEFAULT_TOL,
               dim: int | None = None) -> tuple[FockState, float]:
    """Gazeau-Klauder state: coefficients ``z^n exp(-i e_n gamma) / sqrt(rho(n))``."""
    _check_gamma(gamma)
    _check_radius(z, s.gk_radius, "z")

    def lm(n):
        return amplitude_log_power(n, z)[0] - 0.5 * s.log_rho[s._check(n)]

    def ph(n):
        return amplitude_log_power(n, z)[1] - gamma * s.e(n)

    state, lns = series_state(lm, ph, tol=tol, dim=dim, available=s.size)
    return state, _norm_constant(lns)


def build_gk_dual(s: SpectrumModel, z: complex, gamma: float, *, tol: float = DEFAULT_TOL,
                  dim: int | None = None) -> tuple[FockState, float]:
    """Dual GK state: coefficients ``z^n exp(-i eps_n gamma) / sqrt(mu(n))``."""
    _check_gamma(gamma)
    _check_radius(z, s.gk_dual_radius, "z")

    def lm(n):
        return amplitude_log_power(n, z)[0] - 0.5 * s.log_mu[s._check(n)]

    def ph(n):
        return amplitude_log_power(n, z)[1] - gamma * s.eps(n)

    state, lns = series_state(lm, ph, tol=tol, dim=dim, available=s.size)
    return state, _norm_constant(lns)


def build_gk_combination_s1(s: SpectrumModel, z: complex, gamma: float, *,
                            tol: float = DEFAULT_TOL,
                            dim: int | None = None) -> tuple[FockState, float]:
    """Combined GK dual pair: coefficients ``z^n K(n, gamma) / (n! sqrt(rho(n)))``."""
    _check_gamma(gamma)
    _check_radius(z, min(s.gk_radius, s.gk_dual_radius), "z")

    def lm(n):
        n = s._check(n)
        log_K, _ = gk_K(s, gamma, n)
        _check_K(log_K, n, np.maximum(gammaln(n + 1.0), s.log_rho[n]))
        return amplitude_log_power(n, z)[0] - gammaln(n + 1.0) + log_K - 0.5 * s.log_rho[n]

    def ph(n):
        return amplitude_log_power(n, z)[1] + gk_K(s, gamma, n)[1]

    state, lns = series_state(lm, ph, tol=tol, dim=dim, available=s.size)
    return state, _norm_constant(lns)


def evolve(state: FockState, s: SpectrumModel, t: float) -> FockState:
    """Free evolution: multiply each ``c_n`` by ``exp(-i e_n t)``."""
    n = np.arange(state.dim)
    return FockState(state.coeffs * np.exp(-1j * t * s.e(n)), state.tail_bound)


# ---------------------------------------------------------------------------
# overlaps and dispatch


def overlap_closed_form(pair: tuple[str, str], *, f: NonlinearityFunction | None = None,
                        spectrum: SpectrumModel | None = None, alpha: complex = 0.0,
                        gamma: float | None = None, tol: float = DEFAULT_TOL) -> complex:
    """Closed-form overlap of a dual pair at a common amplitude.

    ``<alpha,f|dual alpha,f> = N_f Ñ_f exp(|alpha|^2)`` and, for GK states,
    ``N Ñ sum_n |z|^{2n} exp(i (e_n - eps_n) gamma) / n!``. The reversed
    order returns the complex conjugate.
    """
    key = tuple(pair)
    if key in {("nlcs", "dual"), ("dual", "nlcs")}:
        if f is None:
            raise ValueError("the nlcs/dual overlap needs f")
        _, n_f = build_nlcs(f, alpha, tol=tol)
        _, n_d = build_dual(f, alpha, tol=tol)
        value = complex(n_f * n_d * math.exp(abs(alpha) ** 2))
        return value if key[0] == "nlcs" else value.conjugate()
    if key in {("gk", "gk-dual"), ("gk-dual", "gk")}:
        if spectrum is None:
            raise ValueError("the GK overlap needs a spectrum")
        _, n_g = build_gkcs(spectrum, alpha, gamma, tol=tol)
        _, n_d = build_gk_dual(spectrum, alpha, gamma, tol=tol)
        n = np.arange(spectrum.size)
        lw = amplitude_log_power(2 * n, abs(alpha))[0] - gammaln(n + 1.0)
        top = np.max(lw)
        phase = (spectrum.energies - spectrum.epsilon) * gamma
        total = np.sum(np.exp(lw - top + 1j * phase)) * math.exp(top)
        value = complex(n_g * n_d * total)
        return value if key[0] == "gk" else value.conjugate()
    raise ValueError(f"no closed-form overlap for the pair {pair!r}")


def build_state(spec: StateSpec, *, tol: float = DEFAULT_TOL,
                dim: int | None = None) -> tuple[FockState, float]:
    """Dispatch a :class:`StateSpec` to its builder; returns ``(state, N)``."""
    s, f = resolve_model(spec)
    kind, amp = spec.kind, spec.alpha
    if kind == "nlcs":
        return build_nlcs(f, amp, tol=tol, dim=dim)
    if kind == "dual":
        return build_dual(f, amp, tol=tol, dim=dim)
    if kind == "combination-s1":
        state, n_s1, _, _ = build_combination_s1(f, amp, tol=tol, dim=dim)
        return state, n_s1
    if kind == "superposition-s2":
        return build_superposition_s2(f, amp, tol=tol, dim=dim)
    if kind == "gk":
        return build_gkcs(s, amp, spec.gamma, tol=tol, dim=dim)
    if kind == "gk-dual":
        return build_gk_dual(s, amp, spec.gamma, tol=tol, dim=dim)
    return build_gk_combination_s1(s, amp, spec.gamma, tol=tol, dim=dim)


def canonical_coherent(alpha: complex, dim: int) -> np.ndarray:
    """Glauber coherent-state coefficients ``exp(-|alpha|^2/2) alpha^n / sqrt(n!)``."""
    out = np.empty(dim, dtype=complex)
    term = complex(math.exp(-abs(alpha) ** 2 / 2))
    for n in range(dim):
        out[n] = term
        term *= alpha / math.sqrt(n + 1)
    return out


__all__ = [
    "KINDS",
    "StateSpec",
    "build_nlcs",
    "build_dual",
    "build_combination",
    "build_combination_s1",
    "build_superposition_s2",
    "build_gkcs",
    "build_gk_dual",
    "build_gk_combination_s1",
    "build_state",
    "overlap_closed_form",
    "evolve",
    "canonical_coherent",
    "resolve_model",
    "g_weights",
]
