import math
from types import SimpleNamespace

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from nlcs.errors import DomainError, TruncationError
from nlcs.fock import (
    FockState,
    apply_annihilate,
    apply_create,
    canonical_commutator_check,
    deformed_operators,
    displacement_apply,
    eigen_residual,
    expectation,
    expm,
    ladder_matrices,
    max_dim,
    parse_word,
    series_state,
    tail_fraction,
)
from nlcs.nonlinearity import get_model
from nlcs.states import build_nlcs, canonical_coherent

amplitudes = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


def _poisson_log_mag(alpha):
    r = abs(alpha)
    return lambda n: n * math.log(r) - 0.5 * np.array([math.lgamma(k + 1.0) for k in n])


class TestFockState:
    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            FockState(np.array([1.0, 1.0]))

    def test_coefficients_are_read_only(self):
        s = FockState.number(2, 4)
        with pytest.raises(ValueError):
            s.coeffs[0] = 1.0

    def test_inner_pads_shorter_vector(self):
        a = FockState.number(1, 2)
        b = FockState.from_vector([0, 1, 1])
        assert a.inner(b) == pytest.approx(1 / math.sqrt(2))

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            FockState.from_vector([0, 0])


class TestSeriesState:
    def test_poisson_coefficients(self):
        state, lns = series_state(_poisson_log_mag(1.3))
        ref = canonical_coherent(1.3, state.dim)
        assert np.abs(state.coeffs - ref).max() < 1e-14
        # sum |alpha|^{2n}/n! = e^{|alpha|^2}
        assert lns == pytest.approx(1.3**2, rel=1e-13)

    def test_dimension_is_power_of_two_and_tail_small(self):
        state, _ = series_state(_poisson_log_mag(3.0))
        assert state.dim & (state.dim - 1) == 0
        assert state.tail_bound < 1e-12

    def test_cap_raises(self):
        with pytest.raises(TruncationError):
            series_state(_poisson_log_mag(6.0), cap=32)

    def test_explicit_dim_checked(self):
        with pytest.raises(TruncationError):
            series_state(_poisson_log_mag(3.0), dim=8)

    def test_env_cap(self, monkeypatch):
        monkeypatch.setenv("NLCS_MAX_DIM", "20")
        assert max_dim() == 20
        monkeypatch.setenv("NLCS_MAX_DIM", "many")
        with pytest.raises(ValueError):
            max_dim()

    def test_tail_fraction_geometric(self):
        # |c_n|^2 = q^n: tail beyond N is q^N of the total
        q = 0.5
        lm = 0.5 * np.arange(64) * math.log(q)
        assert tail_fraction(lm, 20) == pytest.approx(q**20, rel=1e-6)


class TestLadder:
    def test_banded_matches_dense(self):
        rng = np.random.default_rng(1)
        v = rng.normal(size=12) + 1j * rng.normal(size=12)
        m = ladder_matrices(12)
        assert np.allclose(apply_annihilate(v), m.annihilate @ v)
        assert np.allclose(apply_create(v), m.create @ v)

    def test_parse_word_aliases(self):
        assert parse_word(["a", "ad", "a^dag", "a†"]) == ["a", "a†", "a†", "a†"]
        with pytest.raises(ValueError):
            parse_word(["b"])

    def test_number_state_moments(self):
        s = FockState.number(3)
        assert expectation(s, ["a†", "a"]) == pytest.approx(3)
        # a a† on |3> gives 4: needs the padded level
        assert expectation(s, ["a", "a†"]) == pytest.approx(4)
        assert expectation(s, ["a", "a", "a†", "a†"]) == pytest.approx(20)

    @given(amplitudes)
    @settings(max_examples=30, deadline=None)
    def test_coherent_eigen_moments(self, alpha):
        state, _ = series_state(_poisson_log_mag(alpha) if alpha else lambda n: np.where(n == 0, 0.0, -np.inf),
                                lambda n: n * np.angle(alpha))
        # truncation at tail weight 1e-12 limits agreement to ~1e-10
        assert abs(expectation(state, ["a"]) - alpha) < 1e-9
        assert abs(expectation(state, ["a†", "a"]) - abs(alpha) ** 2) < 1e-9
        assert abs(expectation(state, ["a", "a"]) - alpha**2) < 1e-9


class TestExpm:
    @given(st.integers(2, 20), st.floats(0.01, 30.0), st.integers(0, 2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_scipy(self, n, scale, seed):
        rng = np.random.default_rng(seed)
        m = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) * scale / n
        ref = scipy.linalg.expm(m)
        assert np.abs(expm(m) - ref).max() <= 1e-11 * max(1.0, np.abs(ref).max())

    def test_zero_and_diagonal(self):
        assert np.allclose(expm(np.zeros((3, 3))), np.eye(3))
        d = np.diag([0.5, -2.0, 1j])
        assert np.allclose(expm(d), np.diag(np.exp([0.5, -2.0, 1j])))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            expm(np.zeros((2, 3)))


class TestDeformedOperators:
    def test_commutator_interior(self):
        for name in ("identity", "hydrogen", "poschl-teller"):
            _, f = get_model(name)
            assert canonical_commutator_check(f, 40) < 1e-10

    def test_singular_f_rejected(self):
        values = np.ones(8)
        values[3] = 0.0
        with pytest.raises(DomainError):
            deformed_operators(SimpleNamespace(values=values), 8)

    def test_identity_displacement_is_glauber(self):
        _, f = get_model("identity")
        s = displacement_apply(f, 0.8 + 0.3j, 64)
        assert np.abs(s.coeffs - canonical_coherent(0.8 + 0.3j, 64)).max() < 1e-13

    def test_hydrogen_displacement_matches_series(self):
        _, f = get_model("hydrogen")
        series, _ = build_nlcs(f, 0.5, dim=64)
        assert np.abs(displacement_apply(f, 0.5, 64).coeffs - series.coeffs).max() < 1e-12

    def test_displacement_outside_domain(self):
        _, f = get_model("hydrogen")
        with pytest.raises(DomainError):
            displacement_apply(f, 1.0, 64)

    def test_eigen_residual(self):
        _, f = get_model("hydrogen")
        state, _ = build_nlcs(f, 0.6, dim=128)
        A, _ = deformed_operators(f, 128)
        assert eigen_residual(A, state, 0.6) < 1e-8
