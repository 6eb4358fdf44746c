"""Truncated Fock-space primitives.

Everything else in the package is checked against this module: states are
plain coefficient vectors over the number basis, ladder operators act by
matrix-vector products, and the displacement-type construction goes through a
dense matrix exponential.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ConvergenceError, DomainError, TruncationError

DEFAULT_TOL = 1e-12
DEFAULT_MAX_DIM = 4096
MIN_DIM = 16
NORM_TOL = 1e-10

ANNIHILATE = "a"
CREATE = "a†"
_SYMBOLS = {"a": ANNIHILATE, "a†": CREATE, "ad": CREATE, "a^dag": CREATE}


def max_dim() -> int:
    """Truncation cap, overridable through the ``NLCS_MAX_DIM`` variable."""
    raw = os.environ.get("NLCS_MAX_DIM")
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"NLCS_MAX_DIM must be an integer, got {raw!r}") from exc
    if value < 2:
        raise ValueError("NLCS_MAX_DIM must be at least 2")
    return value


def _readonly(arr):
    arr = np.array(arr, dtype=complex)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FockState:
    """Normalized pure state truncated to ``dim`` number levels.

    ``tail_bound`` estimates the squared-norm weight the untruncated series
    would put on levels ``n >= dim``.
    """

    coeffs: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        coeffs = _readonly(self.coeffs)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise ValueError("coeffs must be a non-empty 1-D sequence")
        norm = float(np.vdot(coeffs, coeffs).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        if not self.tail_bound >= 0.0:
            raise ValueError("tail_bound must be nonnegative")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dim(self) -> int:
        return self.coeffs.size

    @classmethod
    def from_vector(cls, vec, tail_bound: float = 0.0) -> "FockState":
        vec = np.asarray(vec, dtype=complex)
        norm = np.linalg.norm(vec)
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(vec / norm, tail_bound)

    @classmethod
    def number(cls, n: int, dim: int | None = None) -> "FockState":
        dim = n + 1 if dim is None else dim
        vec = np.zeros(dim, dtype=complex)
        vec[n] = 1.0
        return cls(vec)

    def padded(self, dim: int) -> np.ndarray:
        """Coefficient vector zero-padded (never cut) to length ``dim``."""
        if dim < self.dim:
            raise ValueError("cannot pad to a smaller dimension")
        out = np.zeros(dim, dtype=complex)
        out[: self.dim] = self.coeffs
        return out

    def inner(self, other: "FockState") -> complex:
        """``<self|other>``, padding the shorter vector with zeros."""
        dim = max(self.dim, other.dim)
        return complex(np.vdot(self.padded(dim), other.padded(dim)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2


# ---------------------------------------------------------------------------
# adaptive truncation


def _log_weights(log_mag: np.ndarray) -> np.ndarray:
    return 2.0 * np.asarray(log_mag, dtype=float)


def tail_fraction(log_mag: np.ndarray, dim: int) -> float:
    """Relative squared-norm weight beyond ``dim`` for the log-magnitudes given.

    ``log_mag`` must extend past ``dim``; whatever lies beyond its end is bounded
    by a geometric series using the last available term ratio, which is an upper
    bound as long as the ratios keep decreasing.
    """
    logw = _log_weights(log_mag)
    if logw.size <= dim:
        raise ValueError("need log magnitudes beyond the truncation point")
    head = logsumexp(logw[:dim])
    explicit = logsumexp(logw[dim:])
    last, prev = logw[-1], logw[-2]
    if last == -np.inf:
        beyond = -np.inf
    else:
        log_ratio = last - prev
        if log_ratio >= 0.0:
            return math.inf
        beyond = last + log_ratio - math.log1p(-math.exp(log_ratio))
    return float(np.exp(np.logaddexp(explicit, beyond) - head))


def series_state(
    log_mag: Callable[[np.ndarray], np.ndarray],
    phase: Callable[[np.ndarray], np.ndarray] | None = None,
    *,
    tol: float = DEFAULT_TOL,
    dim: int | None = None,
    cap: int | None = None,
    available: int | None = None,
) -> tuple[FockState, float]:
    """Build a normalized state from unnormalized coefficients given in log form.

    ``log_mag(n)`` and ``phase(n)`` map an integer array of levels to
    ``log|c_n|`` and ``arg c_n``. The dimension grows in powers of two from
    ``MIN_DIM`` until the estimated tail is below ``tol``; an explicit ``dim``
    skips the search but is still checked. ``available`` is the number of levels
    the callables can evaluate (``None`` means unlimited).

    Returns the state and ``log sum_{n<dim} |c_n|^2`` of the unnormalized
    coefficients, from which normalization constants follow.
    """
    cap = max_dim() if cap is None else cap
    if available is not None:
        cap = min(cap, available - 2)
        if cap < 2:
            raise TruncationError("too few tabulated levels to build a state")

    def probe(n_dim):
        stop = 2 * n_dim
        if available is not None:
            stop = min(stop, available)
        stop = max(stop, n_dim + 2)
        return np.asarray(log_mag(np.arange(stop)), dtype=float)

    if dim is not None:
        if dim < 1:
            raise ValueError("dim must be positive")
        if dim > cap:
            raise TruncationError(f"requested dim={dim} exceeds the cap {cap}")
        lm = probe(dim)
        tail = tail_fraction(lm, dim)
        if not tail < tol:
            raise TruncationError(
                f"dim={dim} leaves tail weight {tail:.3g} above tolerance {tol:.3g}"
            )
    else:
        dim = min(MIN_DIM, cap)
        while True:
            lm = probe(dim)
            tail = tail_fraction(lm, dim)
            if tail < tol:
                break
            if dim >= cap:
                raise TruncationError(
                    f"series did not converge below tolerance {tol:.3g} within "
                    f"the cap of {cap} levels (tail {tail:.3g}); the amplitude "
                    "is probably too close to the domain boundary"
                )
            dim = min(2 * dim, cap)

    lm = lm[:dim]
    n = np.arange(dim)
    shift = np.max(lm)
    if not np.isfinite(shift):
        raise DomainError("series has no finite nonzero coefficient")
    mag = np.exp(lm - shift)
    if phase is not None:
        vec = mag * np.exp(1j * np.asarray(phase(n), dtype=float))
    else:
        vec = mag.astype(complex)
    log_norm_sq = float(logsumexp(2.0 * lm))
    return FockState.from_vector(vec, tail), log_norm_sq


def amplitude_log_power(n: np.ndarray, amplitude: complex) -> tuple[np.ndarray, np.ndarray]:
    """``(log|z^n|, arg z^n)`` with ``0^0 = 1``."""
    n = np.asarray(n)
    r = abs(amplitude)
    if r == 0.0:
        lm = np.where(n == 0, 0.0, -np.inf)
        return lm, np.zeros(n.shape)
    return n * math.log(r), n * np.angle(amplitude)


# ---------------------------------------------------------------------------
# ladder operators


@dataclass(frozen=True)
class LadderMatrices:
    """Dense truncated matrices of ``a`` and ``a†``."""

    annihilate: np.ndarray = field(repr=False)
    create: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.annihilate.shape[0]

    @property
    def number(self) -> np.ndarray:
        return self.create @ self.annihilate


@lru_cache(maxsize=16)
def ladder_matrices(dim: int) -> LadderMatrices:
    if dim < 1:
        raise ValueError("dim must be positive")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    ad = a.conj().T.copy()
    a.flags.writeable = False
    ad.flags.writeable = False
    return LadderMatrices(a, ad)


def apply_annihilate(vec: np.ndarray) -> np.ndarray:
    """``a @ vec`` exploiting the single superdiagonal of ``a``."""
    out = np.zeros_like(vec, dtype=complex)
    out[:-1] = np.sqrt(np.arange(1, vec.size)) * vec[1:]
    return out


def apply_create(vec: np.ndarray) -> np.ndarray:
    """``a† @ vec``; the top level is dropped, so pad before calling."""
    out = np.zeros_like(vec, dtype=complex)
    out[1:] = np.sqrt(np.arange(1, vec.size)) * vec[:-1]
    return out


def parse_word(word: Sequence[str]) -> list[str]:
    try:
        return [_SYMBOLS[s] for s in word]
    except KeyError as exc:
        raise ValueError(f"unknown ladder symbol {exc.args[0]!r}; use 'a' or 'a†'") from None


def expectation(state: FockState, word: Sequence[str], *, dim: int | None = None) -> complex:
    """``<psi| w_1 w_2 ... w_k |psi>`` for a word of ladder symbols.

    The rightmost symbol acts first. The vector is padded with one extra level
    per creation operator so no amplitude is lost at the truncation edge.
    """
    if dim is not None and dim != state.dim:
        raise ValueError(f"dimension mismatch: state has {state.dim}, expected {dim}")
    symbols = parse_word(word)
    size = state.dim + symbols.count(CREATE)
    psi = state.padded(size)
    vec = psi
    for sym in reversed(symbols):
        vec = apply_annihilate(vec) if sym == ANNIHILATE else apply_create(vec)
    return complex(np.vdot(psi, vec))


# ---------------------------------------------------------------------------
# matrix exponential

_UNIT_ROUNDOFF = 2.0**-53
_MAX_TAYLOR_DEGREE = 40


def _taylor_degree(norm: float) -> int:
    # remainder of the degree-m series is bounded by norm^(m+1)/(m+1)! * 1/(1 - norm/(m+2))
    term = 1.0
    for m in range(1, _MAX_TAYLOR_DEGREE + 1):
        term *= norm / m
        rem = term * norm / (m + 1)
        if rem / max(1e-300, 1.0 - norm / (m + 2)) < _UNIT_ROUNDOFF:
            return m
    raise ConvergenceError("Taylor series of the scaled matrix did not converge")


def expm(mat, theta: float = 0.5) -> np.ndarray:
    """Dense matrix exponential by scaling and squaring around a Taylor core.

    The matrix is scaled by ``2**-s`` until its 1-norm is at most ``theta``,
    exponentiated with a Taylor polynomial whose degree comes from the
    remainder bound, then squared ``s`` times.
    """
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("expm needs a square matrix")
    if not np.all(np.isfinite(mat)):
        raise ConvergenceError("matrix has non-finite entries")
    norm = float(np.max(np.sum(np.abs(mat), axis=0))) if mat.size else 0.0
    squarings = 0
    if norm > theta:
        squarings = int(math.ceil(math.log2(norm / theta)))
    scaled = mat / (2.0**squarings)
    degree = _taylor_degree(norm / (2.0**squarings))
    ident = np.eye(mat.shape[0], dtype=complex)
    result = ident.copy()
    for k in range(degree, 0, -1):
        result = ident + (scaled @ result) / k
    for _ in range(squarings):
        result = result @ result
    if not np.all(np.isfinite(result)):
        raise ConvergenceError("matrix exponential overflowed during squaring")
    return result


# ---------------------------------------------------------------------------
# deformed operators


def _diag_values(f, dim: int) -> np.ndarray:
    values = np.asarray(f.values[:dim], dtype=complex)
    if values.size < dim:
        raise TruncationError(f"nonlinearity {f.name!r} is only tabulated up to n={values.size - 1}")
    return values


def _reciprocal(values: np.ndarray) -> np.ndarray:
    # (1/f)(0) := 0 when f(0) = 0; level 0 is annihilated by a anyway
    out = np.zeros_like(values)
    nz = values != 0
    out[nz] = 1.0 / values[nz]
    if not np.all(nz[1:]):
        bad = int(np.flatnonzero(~nz[1:])[0]) + 1
        raise DomainError(f"f(n) vanishes at n={bad}; the reciprocal operator is undefined")
    return out


def deformed_operators(f, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``A = a f(n)`` and ``B = a / f(n)`` on ``dim`` levels."""
    a = ladder_matrices(dim).annihilate
    values = _diag_values(f, dim)
    return a * values[np.newaxis, :], a * _reciprocal(values)[np.newaxis, :]


def canonical_commutator_check(f, dim: int) -> float:
    """Largest deviation of ``[A, B†]`` and ``[B, A†]`` from the identity.

    Only the leading ``(dim-1) x (dim-1)`` block is compared; the last level is
    corrupted by the truncation.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    A, B = deformed_operators(f, dim)
    Ad, Bd = A.conj().T, B.conj().T
    ident = np.eye(dim - 1)
    dev1 = np.abs((A @ Bd - Bd @ A)[:-1, :-1] - ident).max()
    dev2 = np.abs((B @ Ad - Ad @ B)[:-1, :-1] - ident).max()
    return float(max(dev1, dev2))


def _edge_tail(coeffs: np.ndarray) -> float:
    p = np.abs(coeffs) ** 2
    if p.size < 2 or p[-1] == 0.0:
        return 0.0
    if p[-2] == 0.0 or p[-1] >= p[-2]:
        return math.inf
    r = p[-1] / p[-2]
    return float(p[-1] * r / (1.0 - r) / p.sum())


def displacement_apply(f, alpha: complex, dim: int, *, dual: bool = False,
                       tol: float = DEFAULT_TOL) -> FockState:
    """Act with the displacement-type operator on the vacuum.

    With ``A = a f(n)`` and ``B = a / f(n)`` the generator is
    ``alpha B† - conj(alpha) A`` (``dual=False``) or ``alpha A† - conj(alpha) B``
    (``dual=True``). It is not anti-Hermitian, so the result is renormalized.
    """
    alpha = complex(alpha)
    radius = f.dual_amplitude_radius if dual else f.amplitude_radius
    if not abs(alpha) < radius:
        raise DomainError(f"|alpha|={abs(alpha):g} is outside the domain radius {radius:g}")
    if dim > max_dim():
        raise TruncationError(f"dim={dim} exceeds the cap {max_dim()}")
    values = _diag_values(f, dim)
    if np.any(np.abs(values.imag) > 0) or np.any(values.real[1:] <= 0):
        raise DomainError("displacement construction needs f(n) > 0 for 1 <= n < dim")
    A, B = deformed_operators(f, dim)
    if dual:
        gen = alpha * A.conj().T - alpha.conjugate() * B
    else:
        gen = alpha * B.conj().T - alpha.conjugate() * A
    column = expm(gen)[:, 0]
    state = FockState.from_vector(column)
    tail = _edge_tail(state.coeffs)
    if not tail < tol:
        raise TruncationError(f"dim={dim} too small for alpha={alpha} (tail {tail:.3g})")
    return FockState(state.coeffs, tail)


def eigen_residual(op: np.ndarray, state: FockState, value: complex) -> float:
    """``||(op - value)|psi>||`` over all rows but the truncation-corrupted last one."""
    if op.shape != (state.dim, state.dim):
        raise ValueError("operator and state dimensions differ")
    r = op @ state.coeffs - value * state.coeffs
    return float(np.linalg.norm(r[:-1]))
