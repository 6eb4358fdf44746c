"""Nonlinearity functions f(n), discrete spectra e_n and their factorial products.

Products such as ``[f(n)]! = f(1) f(2) ... f(n)`` and ``rho(n) = [e_n]!``
overflow double precision quickly (the Pöschl-Teller ``rho(100)`` already
does), so every product is cached as a log-magnitude plus an accumulated
phase.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, SingularNonlinearityError, TruncationError
from .fock import max_dim

LIMIT_POINTS = (10**6, 2 * 10**6)
LIMIT_RTOL = 1e-4


def default_cache_size() -> int:
    # adaptive truncation probes up to twice the cap; moments reach 4 levels further
    return 2 * max_dim() + 8


def numeric_limit(g: Callable[[np.ndarray], np.ndarray], points=LIMIT_POINTS,
                  rtol: float = LIMIT_RTOL) -> float:
    """Numerical ``lim g(n)``: agreement at two far points, else +inf if growing."""
    v1, v2 = (float(x) for x in g(np.asarray(points, dtype=float)))
    if not (np.isfinite(v1) and np.isfinite(v2)):
        return math.inf
    if abs(v2 - v1) <= rtol * max(abs(v1), abs(v2)):
        return v2
    if v2 > v1:
        return math.inf
    return v2


def _cumulative_log(fn: Callable[[np.ndarray], np.ndarray], n) -> tuple[np.ndarray, np.ndarray]:
    """``(sum_{k=1}^{n} log|fn(k)|, sum arg fn(k))`` for each n in the array."""
    n = np.asarray(n, dtype=np.int64)
    top = int(n.max()) if n.size else 0
    k = np.arange(1, top + 1, dtype=float)
    vals = np.asarray(fn(k))
    logs = np.concatenate(([0.0], np.cumsum(np.log(np.abs(vals)))))
    phases = np.concatenate(([0.0], np.cumsum(np.angle(vals)))) if np.iscomplexobj(vals) else np.zeros(top + 1)
    return logs[n], phases[n]


@dataclass(frozen=True)
class NonlinearityFunction:
    """Tabulated f(n) with cached ``log|[f(n)]!|`` and ``arg [f(n)]!``.

    ``domain_radius`` is ``lim n|f(n)|^2`` and ``dual_radius`` is
    ``lim n/|f(n)|^2``; the amplitude radii are their square roots, since
    the coefficient series are power series in ``|alpha|^2``.
    """

    name: str
    values: np.ndarray = field(repr=False)
    log_factorial: np.ndarray = field(repr=False)
    phase_factorial: np.ndarray = field(repr=False)
    domain_radius: float
    dual_radius: float
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("values", "log_factorial", "phase_factorial"):
            arr = np.array(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_values(cls, name: str, values, *, func=None, domain_radius=None,
                    dual_radius=None) -> "NonlinearityFunction":
        values = np.asarray(values)
        if not np.iscomplexobj(values):
            values = values.astype(float)
        tail = values[1:]
        if np.any(tail == 0):
            bad = int(np.flatnonzero(tail == 0)[0]) + 1
            raise SingularNonlinearityError(bad, f"f({bad}) = 0 makes [f(n)]! vanish")
        log_f = np.concatenate(([0.0], np.cumsum(np.log(np.abs(tail)))))
        if np.iscomplexobj(values):
            phase_f = np.concatenate(([0.0], np.cumsum(np.angle(tail))))
        else:
            if np.any(tail < 0):
                raise DomainError("real nonlinearity functions must be positive")
            phase_f = np.zeros_like(log_f)
        if domain_radius is None or dual_radius is None:
            if func is not None:
                fwd = numeric_limit(lambda n: n * np.abs(func(n)) ** 2)
                back = numeric_limit(lambda n: n / np.abs(func(n)) ** 2)
            else:
                fwd, back = _table_limits(values)
            domain_radius = fwd if domain_radius is None else domain_radius
            dual_radius = back if dual_radius is None else dual_radius
        return cls(name, values, log_f, phase_f, float(domain_radius), float(dual_radius), func)

    @classmethod
    def from_callable(cls, name: str, func, n_cache: int | None = None, **kw):
        n_cache = default_cache_size() if n_cache is None else n_cache
        values = np.asarray(func(np.arange(n_cache, dtype=float)))
        return cls.from_values(name, values, func=func, **kw)

    # -- access ---------------------------------------------------------

    @property
    def size(self) -> int:
        """Number of cached levels (n = 0 .. size-1)."""
        return self.values.size

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    @property
    def amplitude_radius(self) -> float:
        return math.sqrt(self.domain_radius)

    @property
    def dual_amplitude_radius(self) -> float:
        return math.sqrt(self.dual_radius)

    def _check(self, n):
        n = np.asarray(n)
        if n.size and (n.min() < 0 or n.max() >= self.size):
            raise TruncationError(
                f"{self.name!r} is cached for n < {self.size}, asked for n={int(n.max())}"
            )
        return n

    def __call__(self, n):
        return self.values[self._check(n)]

    def log_fact(self, n) -> np.ndarray:
        """``log|[f(n)]!|``."""
        return self.log_factorial[self._check(n)]

    def phase_fact(self, n) -> np.ndarray:
        return self.phase_factorial[self._check(n)]

    def factorial(self, n):
        n = self._check(n)
        return np.exp(self.log_factorial[n] + 1j * self.phase_factorial[n])

    def reciprocal(self) -> "NonlinearityFunction":
        """``1/f``, whose coherent states are the dual family of ``f``'s."""
        vals = np.where(self.values == 0, 0, 1.0 / np.where(self.values == 0, 1, self.values))
        func = None
        if self.func is not None:
            base = self.func
            func = lambda n: 1.0 / base(n)  # noqa: E731
        return NonlinearityFunction(
            f"1/{self.name}", vals, -self.log_factorial, -self.phase_factorial,
            self.dual_radius, self.domain_radius, func,
        )


def _table_limits(values) -> tuple[float, float]:
    n = values.size - 1
    if n < 2:
        return math.inf, math.inf
    pts = np.array([n // 2, n])
    f = np.abs(values[pts]) ** 2

    def lim(v):
        v1, v2 = v
        if abs(v2 - v1) <= LIMIT_RTOL * max(abs(v1), abs(v2)):
            return float(v2)
        return math.inf if v2 > v1 else float(v2)

    return lim(pts * f), lim(pts / f)


def from_table(values, name: str = "table") -> NonlinearityFunction:
    """User nonlinearity from ``[f(1), f(2), ...]``; f(0) is set to 1 (never used)."""
    vals = np.concatenate(([1.0], np.asarray(values, dtype=float)))
    return NonlinearityFunction.from_values(name, vals)


def load_table(path) -> NonlinearityFunction:
    """Read a JSON file of the form ``{"f": [f(1), f(2), ...]}``."""
    path = Path(path)
    data = json.loads(path.read_text())
    if not isinstance(data, dict) or "f" not in data:
        raise ValueError(f"{path}: expected a JSON object with an 'f' list")
    return from_table(data["f"], name=path.stem)


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class SpectrumModel:
    """Nondegenerate spectrum ``e_n`` with ``e_0 = 0`` and its GK companions.

    ``rho(n) = [e_n]!``, ``mu(n) = (n!)^2 / rho(n)`` and ``eps_n = n^2/e_n``
    (``eps_0 = 0``), the first two stored as logarithms.
    """

    name: str
    energies: np.ndarray = field(repr=False)
    log_rho: np.ndarray = field(repr=False)
    log_mu: np.ndarray = field(repr=False)
    epsilon: np.ndarray = field(repr=False)
    gk_radius: float
    gk_dual_radius: float
    energy: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("energies", "log_rho", "log_mu", "epsilon"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def from_energies(cls, name: str, energies, energy=None) -> "SpectrumModel":
        e = np.asarray(energies, dtype=float)
        if e.size < 2:
            raise ValueError("need at least two levels")
        if e[0] != 0.0:
            raise DomainError(f"spectrum {name!r} must satisfy e_0 = 0, got {e[0]!r}")
        if np.any(np.diff(e) <= 0):
            bad = int(np.flatnonzero(np.diff(e) <= 0)[0]) + 1
            raise DomainError(f"spectrum {name!r} is not strictly increasing at n={bad}")
        n = np.arange(e.size, dtype=float)
        log_rho = np.concatenate(([0.0], np.cumsum(np.log(e[1:]))))
        log_mu = 2.0 * gammaln(n + 1) - log_rho
        eps = np.zeros_like(e)
        eps[1:] = n[1:] ** 2 / e[1:]
        if energy is not None:
            lim_e = numeric_limit(energy)
            lim_eps = numeric_limit(lambda k: k**2 / energy(k))
        else:
            lim_e, lim_eps = _table_limits_plain(e), _table_limits_plain(eps)
        return cls(name, e, log_rho, log_mu, eps, math.sqrt(lim_e), math.sqrt(lim_eps), energy)

    @classmethod
    def from_callable(cls, name: str, energy, n_cache: int | None = None) -> "SpectrumModel":
        n_cache = default_cache_size() if n_cache is None else n_cache
        return cls.from_energies(name, energy(np.arange(n_cache, dtype=float)), energy)

    @classmethod
    def from_nonlinearity(cls, f: NonlinearityFunction) -> "SpectrumModel":
        """Spectrum ``e_n = n |f(n)|^2`` generated by a nonlinearity."""
        n = np.arange(f.size, dtype=float)
        energy = None
        if f.func is not None:
            base = f.func
            energy = lambda k: k * np.abs(base(k)) ** 2  # noqa: E731
        return cls.from_energies(f.name, n * np.abs(f.values) ** 2, energy)

    @property
    def size(self) -> int:
        return self.energies.size

    def _check(self, n):
        n = np.asarray(n)
        if n.size and (n.min() < 0 or n.max() >= self.size):
            raise TruncationError(f"spectrum {self.name!r} is cached for n < {self.size}")
        return n

    def e(self, n):
        return self.energies[self._check(n)]

    def eps(self, n):
        return self.epsilon[self._check(n)]

    def log_rho_at(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        if n.size and n.max() < self.size:
            return self.log_rho[n]
        if self.energy is None:
            raise TruncationError(f"spectrum {self.name!r} is only tabulated for n < {self.size}")
        return _cumulative_log(self.energy, n)[0]


def _table_limits_plain(v) -> float:
    n = v.size - 1
    v1, v2 = v[n // 2], v[n]
    if abs(v2 - v1) <= LIMIT_RTOL * max(abs(v1), abs(v2)):
        return float(v2)
    return math.inf if v2 > v1 else float(v2)


# ---------------------------------------------------------------------------
# built-in realizations


def identity() -> tuple[SpectrumModel, NonlinearityFunction]:
    """Harmonic oscillator: ``f = 1``, ``e_n = n``."""
    f = NonlinearityFunction.from_callable("identity", lambda n: np.ones_like(np.asarray(n, dtype=float)))
    s = SpectrumModel.from_callable("identity", lambda n: np.asarray(n, dtype=float))
    return s, f


def hydrogen_like() -> tuple[SpectrumModel, NonlinearityFunction]:
    """Hydrogen-like spectrum ``e_n = 1 - 1/(n+1)^2``, ``f(n) = sqrt(n+2)/(n+1)``."""
    s = SpectrumModel.from_callable("hydrogen", lambda n: 1.0 - 1.0 / (np.asarray(n, dtype=float) + 1.0) ** 2)
    f = NonlinearityFunction.from_callable("hydrogen", lambda n: np.sqrt(n + 2.0) / (n + 1.0))
    return s, f


def poschl_teller(lam: float = 4.0, kappa: float = 4.0) -> tuple[SpectrumModel, NonlinearityFunction]:
    """Pöschl-Teller spectrum ``e_n = n(n + lam + kappa)``, ``f(n) = sqrt(n + lam + kappa)``."""
    if not (lam > 1 and kappa > 1):
        raise DomainError(f"Pöschl-Teller needs lambda > 1 and kappa > 1, got {lam}, {kappa}")
    shift = float(lam) + float(kappa)
    name = f"poschl-teller({lam:g},{kappa:g})"
    s = SpectrumModel.from_callable(name, lambda n: np.asarray(n, dtype=float) * (np.asarray(n, dtype=float) + shift))
    f = NonlinearityFunction.from_callable(name, lambda n: np.sqrt(n + shift))
    return s, f


MODELS = {
    "identity": identity,
    "hydrogen": hydrogen_like,
    "poschl-teller": poschl_teller,
}


def get_model(name: str, lam: float | None = None, kappa: float | None = None):
    """Look up a built-in model, or load a tabulated f from a ``.json`` path.

    Returns ``(spectrum, f)``; for tables the spectrum is ``n f(n)^2``.
    """
    if name == "poschl-teller":
        return poschl_teller(4.0 if lam is None else lam, 4.0 if kappa is None else kappa)
    if name in MODELS:
        return MODELS[name]()
    if name.endswith(".json"):
        f = load_table(name)
        return SpectrumModel.from_nonlinearity(f), f
    raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)} or a .json table")


# ---------------------------------------------------------------------------
# derived nonlinearities


def _log1p_sq(log_f: np.ndarray) -> np.ndarray:
    """``log(1 + exp(2 log_f))`` without overflow."""
    return np.logaddexp(0.0, 2.0 * log_f)


def combined_nonlinearity(f: NonlinearityFunction) -> NonlinearityFunction:
    """Nonlinearity of the first-kind combination of ``f``'s dual pair.

    ``f_s1(n) = (1 + [f(n-1)]!^2) / (1 + [f(n)]!^2) * f(n)``; by telescoping
    ``[f_s1(n)]! = 2 [f(n)]! / (1 + [f(n)]!^2)``.
    """
    if f.is_complex or np.any(f.values[1:] <= 0):
        raise DomainError("combined_nonlinearity needs a real positive f")
    lf = f.log_factorial
    l1 = _log1p_sq(lf)
    log_fs = np.zeros_like(lf)
    log_fs[1:] = l1[:-1] - l1[1:] + np.log(f.values[1:])
    values = np.exp(log_fs)
    values[0] = 1.0

    func = None
    if f.func is not None:
        base = f.func

        def func(n):
            n = np.asarray(n)
            ni = np.rint(n).astype(np.int64)
            lf_n, _ = _cumulative_log(base, ni)
            lf_m, _ = _cumulative_log(base, np.maximum(ni - 1, 0))
            return base(n) * np.exp(_log1p_sq(lf_m) - _log1p_sq(lf_n))

    return NonlinearityFunction.from_values(f"s1[{f.name}]", values, func=func)


def gk_K(s: SpectrumModel, gamma: float, n) -> tuple[np.ndarray, np.ndarray]:
    """``K(n, gamma) = n! e^{-i gamma e_n} + [e_n]! e^{-i gamma eps_n}`` as (log|K|, arg K)."""
    n = np.asarray(n, dtype=np.int64)
    la = gammaln(n + 1.0)
    lb = s.log_rho[s._check(n)]
    top = np.maximum(la, lb)
    z = np.exp(la - top - 1j * gamma * s.energies[n]) + np.exp(lb - top - 1j * gamma * s.epsilon[n])
    with np.errstate(divide="ignore"):
        return top + np.log(np.abs(z)), np.angle(z)


def _check_K(log_K, n, scale):
    # |K| far below its two terms means cancellation to working precision
    bad = log_K - scale < math.log(1e-13)
    if np.any(bad):
        raise SingularNonlinearityError(int(np.asarray(n)[np.flatnonzero(bad)[0]]), None)


def gk_combined_nonlinearity(s: SpectrumModel, gamma: float) -> NonlinearityFunction:
    """Complex nonlinearity of the combined Gazeau-Klauder dual pair.

    Applying the coefficient-ratio rule ``f(n) = C_{n-1} / (sqrt(n) C_n)`` to
    ``C_n = K(n, gamma) / (n! sqrt(rho(n)))`` gives
    ``f(n) = sqrt(n e_n) K(n-1, gamma) / K(n, gamma)``.
    """
    if gamma == 0:
        raise DomainError("gamma must be nonzero")
    n = np.arange(s.size)
    log_K, arg_K = gk_K(s, gamma, n)
    _check_K(log_K, n, np.maximum(gammaln(n + 1.0), s.log_rho))
    nf = n[1:].astype(float)
    log_mag = 0.5 * np.log(nf * s.energies[1:]) + log_K[:-1] - log_K[1:]
    values = np.empty(s.size, dtype=complex)
    values[0] = 1.0
    values[1:] = np.exp(log_mag + 1j * (arg_K[:-1] - arg_K[1:]))

    domain = dual = None
    if s.energy is not None:
        def mag_sq(k):
            # asymptotic magnitude only: both limits depend on |f| alone
            k = np.rint(np.asarray(k)).astype(np.int64)
            lr_k = s.log_rho_at(k)
            lr_m = s.log_rho_at(k - 1)
            lk = np.logaddexp(gammaln(k + 1.0), lr_k)
            lm = np.logaddexp(gammaln(k.astype(float)), lr_m)
            return k * s.energy(k.astype(float)) * np.exp(2 * (lm - lk))
        # the magnitude bound above ignores phases, fine at large n where one term dominates
        domain = numeric_limit(lambda k: np.asarray(k) * mag_sq(k))
        dual = numeric_limit(lambda k: np.asarray(k) / mag_sq(k))
    return NonlinearityFunction.from_values(
        f"gk-s1[{s.name},{gamma:g}]", values, domain_radius=domain, dual_radius=dual,
    )


def gk_combined_nonlinearity_raw(s: SpectrumModel, gamma: float, n) -> np.ndarray:
    """The bare ratio ``K(n-1, gamma) / K(n, gamma)`` without the ``sqrt(n e_n)`` factor."""
    n = np.asarray(n, dtype=np.int64)
    lk, ak = gk_K(s, gamma, n)
    lm, am = gk_K(s, gamma, n - 1)
    return np.exp(lm - lk + 1j * (am - ak))


def deformed_spectrum(f: NonlinearityFunction, n_max: int) -> np.ndarray:
    """Spectrum ``n |f(n)|^2`` of the deformed Hamiltonian ``A† A``."""
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    n = np.arange(n_max + 1)
    return n * np.abs(f(n)) ** 2
