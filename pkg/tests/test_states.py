import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlcs.errors import DomainError
from nlcs.nonlinearity import combined_nonlinearity, get_model
from nlcs.states import (
    GK_KINDS,
    KINDS,
    StateSpec,
    build_combination,
    build_combination_s1,
    build_dual,
    build_gk_combination_s1,
    build_gk_dual,
    build_gkcs,
    build_nlcs,
    build_state,
    build_superposition_s2,
    canonical_coherent,
    evolve,
    g_weights,
    overlap_closed_form,
)

H_S, H_F = get_model("hydrogen")
PT_S, PT_F = get_model("poschl-teller", 4.0, 4.0)


def _hf_fact(n):
    return math.prod(math.sqrt(k + 2) / (k + 1) for k in range(1, n + 1))


def _normalized(c):
    c = np.asarray(c, dtype=complex)
    return c / np.linalg.norm(c)


def _pt_rho(n):
    return math.prod(k * (k + 8) for k in range(1, n + 1))


def _pt_eps(n):
    return n / (n + 8)


class TestDualPair:
    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.3 - 0.6j, 0.9])
    def test_nlcs_against_direct_sum(self, alpha):
        state, norm = build_nlcs(H_F, alpha)
        # c_n = c_{n-1} alpha / (sqrt(n) f(n))
        raw = [1.0 + 0j]
        for n in range(1, state.dim):
            raw.append(raw[-1] * alpha * (n + 1) / (math.sqrt(n) * math.sqrt(n + 2)))
        assert np.abs(state.coeffs - _normalized(raw)).max() < 1e-13
        assert norm == pytest.approx(1 / np.linalg.norm(raw), rel=1e-12)

    @pytest.mark.parametrize("beta", [0.5, 1.5, 3.0j])
    def test_dual_against_direct_sum(self, beta):
        state, _ = build_dual(H_F, beta)
        raw = [beta**n * _hf_fact(n) / math.sqrt(math.factorial(n)) for n in range(state.dim)]
        assert np.abs(state.coeffs - _normalized(raw)).max() < 1e-13

    def test_domain(self):
        with pytest.raises(DomainError):
            build_nlcs(H_F, 1.0)
        with pytest.raises(DomainError):
            build_dual(PT_F, 1.0)

    def test_dual_is_nlcs_of_reciprocal(self):
        a, _ = build_dual(H_F, 0.7)
        b, _ = build_nlcs(H_F.reciprocal(), 0.7)
        assert np.abs(a.coeffs - b.coeffs).max() < 1e-14

    def test_overlap(self):
        a, n_f = build_nlcs(H_F, 0.4 + 0.2j)
        b, n_d = build_dual(H_F, 0.4 + 0.2j)
        value = overlap_closed_form(("nlcs", "dual"), f=H_F, alpha=0.4 + 0.2j)
        assert value == pytest.approx(a.inner(b), abs=1e-13)
        assert value == pytest.approx(n_f * n_d * math.exp(0.2), rel=1e-13)
        assert overlap_closed_form(("dual", "nlcs"), f=H_F, alpha=0.4 + 0.2j) == pytest.approx(value.conjugate())


class TestSuperpositions:
    def test_s1_coefficients(self):
        alpha = 0.6
        state, n_s1, c1, c2 = build_combination_s1(H_F, alpha)
        raw = [alpha**n * (1 + _hf_fact(n) ** 2) / (math.sqrt(math.factorial(n)) * _hf_fact(n))
               for n in range(state.dim)]
        assert np.abs(state.coeffs - _normalized(raw)).max() < 1e-13
        _, n_f = build_nlcs(H_F, alpha)
        _, n_d = build_dual(H_F, alpha)
        assert c1 == pytest.approx(n_s1 / n_f) and c2 == pytest.approx(n_s1 / n_d)

    def test_s1_matches_derived_nonlinearity(self):
        fs = combined_nonlinearity(H_F)
        a, _, _, _ = build_combination_s1(H_F, 0.5)
        b, _ = build_nlcs(fs, 0.5)
        assert np.abs(a.coeffs - b.padded(a.dim)[: a.dim]).max() < 1e-12

    def test_general_combination_reduces_to_s1(self):
        a, _ = build_combination(H_F, 0.3, 0.3)
        b, _, _, _ = build_combination_s1(H_F, 0.3)
        assert np.abs(a.coeffs - b.coeffs).max() < 1e-14

    def test_s2_is_sum_of_normalized(self):
        alpha = 0.7
        state, _ = build_superposition_s2(H_F, alpha)
        a, _ = build_nlcs(H_F, alpha, dim=state.dim)
        b, _ = build_dual(H_F, alpha, dim=state.dim)
        assert np.abs(state.coeffs - _normalized(a.coeffs + b.coeffs)).max() < 1e-12


class TestGazeauKlauder:
    def test_gk_coefficients(self):
        z, g = 0.8 + 0.1j, 0.5
        state, _ = build_gkcs(PT_S, z, g)
        raw = [z**n * cmath.exp(-1j * g * n * (n + 8)) / math.sqrt(_pt_rho(n)) for n in range(state.dim)]
        assert np.abs(state.coeffs - _normalized(raw)).max() < 1e-13

    def test_gk_dual_coefficients(self):
        z, g = 0.6, 1.5
        state, _ = build_gk_dual(PT_S, z, g)
        raw = [z**n * cmath.exp(-1j * g * _pt_eps(n)) * math.sqrt(_pt_rho(n)) / math.factorial(n)
               for n in range(state.dim)]
        assert np.abs(state.coeffs - _normalized(raw)).max() < 1e-13

    def test_gk_s1_coefficients(self):
        z, g = 0.5, 0.5
        state, _ = build_gk_combination_s1(PT_S, z, g)
        raw = []
        for n in range(state.dim):
            rho, fact = _pt_rho(n), math.factorial(n)
            K = fact * cmath.exp(-1j * g * n * (n + 8)) + rho * cmath.exp(-1j * g * _pt_eps(n))
            raw.append(z**n * K / (fact * math.sqrt(rho)))
        assert np.abs(state.coeffs - _normalized(raw)).max() < 1e-13

    def test_gk_dual_diverges_on_unit_circle(self):
        with pytest.raises(DomainError):
            build_gk_dual(PT_S, 1.0, 0.5)
        with pytest.raises(DomainError):
            build_gk_combination_s1(PT_S, 2.0, 0.5)

    def test_zero_gamma(self):
        with pytest.raises(DomainError):
            build_gkcs(PT_S, 0.5, 0.0)
        with pytest.raises(DomainError):
            StateSpec("gk", "poschl-teller", 0.5, 0.0)

    @given(st.floats(0.05, 0.9), st.floats(0.1, 3.0), st.floats(-3.0, 3.0))
    @settings(max_examples=30, deadline=None)
    def test_temporal_stability(self, z, gamma, t):
        a, _ = build_gkcs(PT_S, z, gamma)
        b, _ = build_gkcs(PT_S, z, gamma + t, dim=a.dim)
        assert np.abs(evolve(a, PT_S, t).coeffs - b.coeffs).max() < 1e-12

    def test_gk_overlap(self):
        a, _ = build_gkcs(PT_S, 0.5, 0.5)
        b, _ = build_gk_dual(PT_S, 0.5, 0.5)
        value = overlap_closed_form(("gk", "gk-dual"), spectrum=PT_S, alpha=0.5, gamma=0.5)
        assert abs(value - a.inner(b)) < 1e-13


class TestSpec:
    specs = st.builds(
        lambda kind, re, im, g: StateSpec(kind, "poschl-teller" if kind in GK_KINDS else "hydrogen",
                                          complex(re, im), g if kind in GK_KINDS else None),
        st.sampled_from(KINDS), st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(0.1, 6.0),
    )

    @given(specs)
    @settings(max_examples=40, deadline=None)
    def test_json_roundtrip(self, spec):
        assert StateSpec.from_json(spec.to_json()) == spec

    @given(specs)
    @settings(max_examples=40, deadline=None)
    def test_build_is_normalized(self, spec):
        state, norm = build_state(spec)
        assert abs(np.vdot(state.coeffs, state.coeffs) - 1) < 1e-12
        assert norm > 0

    def test_from_dict_variants(self):
        s = StateSpec.from_dict({"kind": "gk", "model": "poschl-teller", "z": [0.1, 0.2], "gamma": 1,
                                 "lambda": 5, "kappa": 3})
        assert s.alpha == 0.1 + 0.2j and s.lam == 5 and s.kappa == 3
        with pytest.raises(ValueError):
            StateSpec.from_dict({"kind": "nlcs", "model": "hydrogen"})
        with pytest.raises(ValueError):
            StateSpec("bogus", "hydrogen", 0.1)

    @pytest.mark.parametrize("kind", KINDS)
    def test_identity_limit(self, kind):
        gamma = 0.4 if kind in GK_KINDS else None
        state, _ = build_state(StateSpec(kind, "identity", 0.7, gamma))
        amp = 0.7 * cmath.exp(-0.4j) if gamma else 0.7
        assert np.abs(state.coeffs - canonical_coherent(amp, state.dim)).max() < 1e-13


class TestSpecExamples:
    def test_s2_differs_from_s1(self):
        a, _, _, _ = build_combination_s1(H_F, 0.5)
        b, _ = build_superposition_s2(H_F, 0.5)
        assert abs(a.inner(b)) < 1 - 1e-6

    def test_g_weight_at_zero(self):
        log_g, n_f, n_d = g_weights(H_F, 0.4, np.array([0]))
        assert math.exp(log_g[0]) == pytest.approx(n_f + n_d, rel=1e-14)

    def test_gk_unit_circle_is_inside_gk_domain(self):
        state, _ = build_gkcs(PT_S, 1.0, 0.5)
        assert abs(np.vdot(state.coeffs, state.coeffs) - 1) < 1e-12

    def test_gk_combination_not_temporally_stable(self):
        z, gamma, t = 0.5, 0.5, 0.3
        a, _ = build_gk_combination_s1(PT_S, z, gamma)
        b, _ = build_gk_combination_s1(PT_S, z, gamma + t, dim=a.dim)
        assert abs(evolve(a, PT_S, t).inner(b)) < 1 - 1e-6
