"""Photon statistics and squeezing indicators.

Moments come from two independent routes: closed-form series written
directly in terms of ``[f(n)]!``, ``G(n, |alpha|^2)`` and ``K(n, gamma)``,
and the Fock-space oracle (ladder operators acting on the coefficient
vector). The indicator functions only see a :class:`MomentSet`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.special import gammaln, logsumexp

from .fock import DEFAULT_TOL, FockState, expectation
from .nonlinearity import NonlinearityFunction, SpectrumModel, gk_K
from .states import (
    StateSpec,
    build_dual,
    build_nlcs,
    build_state,
    resolve_model,
)

CLOSED_FORM = "closed-form"
ORACLE = "oracle"
CLOSED_FORM_KINDS = frozenset({"combination-s1", "superposition-s2", "gk-combination-s1"})

WORDS = {
    "m_a": ("a",),
    "m_a2": ("a", "a"),
    "m_a4": ("a", "a", "a", "a"),
    "m_n": ("a†", "a"),
    "m_n2corr": ("a†", "a†", "a", "a"),
    "m_a2ad2": ("a", "a", "a†", "a†"),
}


@dataclass(frozen=True)
class MomentSet:
    """``<a>``, ``<a^2>``, ``<a^4>``, ``<a†a>``, ``<a†^2 a^2>``, ``<a^2 a†^2>``.

    Conjugate moments (``<a†>`` and friends) are the complex conjugates.
    """

    m_a: complex
    m_a2: complex
    m_a4: complex
    m_n: float
    m_n2corr: float
    m_a2ad2: float
    source: str

    def reordering_defect(self) -> float:
        """``<a^2 a†^2> - <a†^2 a^2> - 4<a†a> - 2``, zero for any state."""
        return self.m_a2ad2 - self.m_n2corr - 4.0 * self.m_n - 2.0

    def values(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "source"}


def moment_state(spec: StateSpec, tol: float = DEFAULT_TOL) -> FockState:
    """State truncated finely enough for moments accurate to about ``tol``.

    Truncation errors in ``<a^k>`` come from cross terms between kept and
    dropped levels, which scale with the square root of the dropped weight,
    so the tail weight is held to ``tol**2``.
    """
    return build_state(spec, tol=tol * tol)[0]


def moments_oracle(state: FockState) -> MomentSet:
    """All moments by direct operator application on the truncated state."""
    vals = {name: expectation(state, word) for name, word in WORDS.items()}
    return MomentSet(
        m_a=vals["m_a"],
        m_a2=vals["m_a2"],
        m_a4=vals["m_a4"],
        m_n=vals["m_n"].real,
        m_n2corr=vals["m_n2corr"].real,
        m_a2ad2=vals["m_a2ad2"].real,
        source=ORACLE,
    )


# ---------------------------------------------------------------------------
# closed-form series


def _pow_log(r: float, k):
    """``log r^k`` with ``0^0 = 1``."""
    k = np.asarray(k, dtype=float)
    if r == 0.0:
        return np.where(k == 0, 0.0, -np.inf)
    return k * math.log(r)


def _weighted_sum(log_terms, log_norm, phase=0.0) -> complex:
    """``exp(-log_norm) * sum exp(log_terms + i phase)`` without overflow."""
    log_terms = np.asarray(log_terms, dtype=float)
    top = np.max(log_terms)
    if top == -np.inf:
        return 0j
    s = np.sum(np.exp(log_terms - top + 1j * np.asarray(phase)))
    return complex(s * math.exp(top - log_norm))


def _finish(m_a, m_a2, m_a4, m_n, m_n2) -> MomentSet:
    # <a^2 a†^2> is not among the series; use a^2 a†^2 = a†^2 a^2 + 4 a†a + 2
    m_n, m_n2 = m_n.real, m_n2.real
    return MomentSet(m_a, m_a2, m_a4, m_n, m_n2, m_n2 + 4.0 * m_n + 2.0, CLOSED_FORM)


def _series_s(alpha: complex, log_w, log_f, dim: int) -> MomentSet:
    """Shared shape of the two dual-pair superpositions.

    Both have coefficients ``alpha^n W(n) / (sqrt(n!) [f(n)]!)`` with a real
    positive weight ``W``: ``1 + [f(n)]!^2`` for the first kind and
    ``G(n, |alpha|^2)`` for the second.
    """
    r, theta = abs(alpha), np.angle(alpha)
    n = np.arange(dim)
    lfact = gammaln(n + 1.0)
    log_norm = logsumexp(_pow_log(r, 2 * n) + 2 * log_w(n) - lfact - 2 * log_f(n))

    def ladder(p):
        terms = (_pow_log(r, 2 * n + p) + log_w(n + p) + log_w(n) - lfact
                 - log_f(n) - log_f(n + p))
        return _weighted_sum(terms, log_norm, p * theta)

    def number(p):
        terms = _pow_log(r, 2 * (n + p)) + 2 * log_w(n + p) - lfact - 2 * log_f(n + p)
        return _weighted_sum(terms, log_norm)

    return _finish(ladder(1), ladder(2), ladder(4), number(1), number(2))


def moments_s1(f: NonlinearityFunction, alpha: complex, dim: int) -> MomentSet:
    """Closed-form moments of the first-kind combination."""
    def log_w(n):
        return np.logaddexp(0.0, 2.0 * f.log_fact(n))

    return _series_s(alpha, log_w, f.log_fact, dim)


def moments_s2(f: NonlinearityFunction, alpha: complex, dim: int,
               tol: float = DEFAULT_TOL) -> MomentSet:
    """Closed-form moments of the second-kind superposition."""
    _, n_f = build_nlcs(f, alpha, tol=tol)
    _, n_d = build_dual(f, alpha, tol=tol)
    log_nf, log_nd = math.log(n_f), math.log(n_d)

    def log_g(n):
        return np.logaddexp(log_nf, log_nd + 2.0 * f.log_fact(n))

    return _series_s(alpha, log_g, f.log_fact, dim)


def moments_gk_s1(s: SpectrumModel, z: complex, gamma: float, dim: int) -> MomentSet:
    """Closed-form moments of the combined Gazeau-Klauder dual pair."""
    r, theta = abs(z), np.angle(z)
    n = np.arange(dim)
    lfact = gammaln(n + 1.0)
    log_K, arg_K = gk_K(s, gamma, n)
    base = _pow_log(r, 2 * n) + 2 * log_K - 2 * lfact - s.log_rho[n]
    log_norm = logsumexp(base)

    def ladder(p):
        lk_p, ak_p = gk_K(s, gamma, n + p)
        rising = gammaln(n + p + 1.0) - lfact
        terms = (_pow_log(r, 2 * n + p) + lk_p + log_K - 2 * lfact
                 - 0.5 * (s.log_rho[n] + s.log_rho[n + p] + rising))
        return _weighted_sum(terms, log_norm, p * theta + ak_p - arg_K)

    with np.errstate(divide="ignore"):
        m_n = _weighted_sum(base + np.log(n), log_norm)
        m_n2 = _weighted_sum(base + np.log(n) + np.log(np.maximum(n - 1, 0)), log_norm)
    return _finish(ladder(1), ladder(2), ladder(4), m_n, m_n2)


def moments_closed_form(spec: StateSpec, *, tol: float = DEFAULT_TOL,
                        dim: int | None = None) -> MomentSet:
    """Closed-form moments for the three families that have them.

    The series are truncated at the dimension :func:`moment_state` picks (or
    ``dim``), with up to four more levels reached by the ladder terms.
    """
    if spec.kind not in CLOSED_FORM_KINDS:
        raise ValueError(
            f"no closed-form moments for kind {spec.kind!r}; use the oracle "
            f"(closed forms exist for {sorted(CLOSED_FORM_KINDS)})"
        )
    if dim is None:
        dim = moment_state(spec, tol).dim
    s, f = resolve_model(spec)
    if spec.kind == "combination-s1":
        return moments_s1(f, spec.alpha, dim)
    if spec.kind == "superposition-s2":
        return moments_s2(f, spec.alpha, dim, tol)
    return moments_gk_s1(s, spec.alpha, spec.gamma, dim)


# ---------------------------------------------------------------------------
# criteria


def g2(m: MomentSet) -> float:
    """Zero-delay second-order correlation; NaN for the vacuum."""
    if m.m_n <= 0.0:
        return math.nan
    return m.m_n2corr / m.m_n**2


def classify_statistics(value: float, atol: float = 1e-10) -> str:
    if math.isnan(value):
        return "undefined"
    if value < 1.0 - atol:
        return "sub-Poissonian"
    if value > 1.0 + atol:
        return "super-Poissonian"
    return "Poissonian"


def quadrature_squeezing(m: MomentSet) -> tuple[float, float]:
    """``(I1, I2)``; negative values signal squeezing in x or y.

    ``4 Var(x) = I1 + 1`` and ``4 Var(y) = I2 + 1`` for
    ``x = (a + a†)/2``, ``y = (a - a†)/2i``.
    """
    a, a2 = m.m_a, m.m_a2
    ad, ad2 = a.conjugate(), a2.conjugate()
    i1 = a2 + ad2 - a**2 - ad**2 - 2 * a * ad + 2 * m.m_n
    i2 = -a2 - ad2 + a**2 + ad**2 - 2 * a * ad + 2 * m.m_n
    return float(i1.real), float(i2.real)


def amplitude_squared_squeezing(m: MomentSet) -> tuple[float, float]:
    """``(I3, I4)``; negative values signal squeezing of ``Re a^2`` or ``Im a^2``."""
    a2, a4 = m.m_a2, m.m_a4
    ad2, ad4 = a2.conjugate(), a4.conjugate()
    quartic = m.m_n2corr + m.m_a2ad2
    i3 = 0.25 * (a4 + ad4 + quartic - a2**2 - ad2**2 - 2 * a2 * ad2) - m.m_n - 0.5
    i4 = 0.25 * (-a4 - ad4 + quartic + a2**2 + ad2**2 - 2 * a2 * ad2) - m.m_n - 0.5
    return float(i3.real), float(i4.real)


@dataclass(frozen=True)
class NonclassicalityReport:
    g2: float
    I1: float
    I2: float
    I3: float
    I4: float
    mean_n: float
    source: str = ORACLE

    @classmethod
    def from_moments(cls, m: MomentSet) -> "NonclassicalityReport":
        i1, i2 = quadrature_squeezing(m)
        i3, i4 = amplitude_squared_squeezing(m)
        return cls(g2(m), i1, i2, i3, i4, m.m_n, m.source)

    @property
    def var_x(self) -> float:
        return (self.I1 + 1.0) / 4.0

    @property
    def var_y(self) -> float:
        return (self.I2 + 1.0) / 4.0

    def heisenberg_product(self) -> float:
        """``Var(x) Var(y)``, bounded below by 1/16."""
        return self.var_x * self.var_y

    def statistics(self) -> str:
        return classify_statistics(self.g2)


CSV_COLUMNS = ("amplitude", "gamma", "g2", "I1", "I2", "I3", "I4", "mean_n", "source")


def report_row(report: NonclassicalityReport | None, amplitude: float,
               gamma: float | None) -> dict:
    """One CSV row; a ``None`` report becomes a row of missing cells."""
    row = {"amplitude": amplitude, "gamma": gamma}
    if report is None:
        row.update({k: None for k in CSV_COLUMNS[2:-1]})
        row["source"] = "missing"
    else:
        row.update(g2=report.g2, I1=report.I1, I2=report.I2, I3=report.I3,
                   I4=report.I4, mean_n=report.mean_n, source=report.source)
    return row


def evaluate(spec: StateSpec, *, source: str = "auto", tol: float = DEFAULT_TOL) -> NonclassicalityReport:
    """Report for one state; ``source`` is ``auto``, ``oracle`` or ``closed-form``.

    ``auto`` uses the closed form where one exists and the oracle otherwise.
    """
    if source not in ("auto", ORACLE, CLOSED_FORM):
        raise ValueError(f"unknown moment source {source!r}")
    if source == CLOSED_FORM or (source == "auto" and spec.kind in CLOSED_FORM_KINDS):
        m = moments_closed_form(spec, tol=tol)
    else:
        m = moments_oracle(moment_state(spec, tol))
    return NonclassicalityReport.from_moments(m)
