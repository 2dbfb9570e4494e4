import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlsform.fourier_field import FourierField, MultiplierSpec, apply_multiplier, random_field
from nlsform.algebra import (
    HomogeneousHamiltonian,
    evaluate,
    free_weights,
    gradient_bar,
    hh_terms,
    make_nls_nonlinearity,
    mass_tensor,
    norm_bounds,
    norm_lower_bound,
    norm_upper_bound,
    random_tensor,
    split_resonant,
)
from nlsform.algebra.tensor import class_R, monomials


def test_norm_of_zero_tensor():
    z = HomogeneousHamiltonian.empty(3, 4)
    assert norm_upper_bound(z) == 0.0
    assert norm_lower_bound(z) == 0.0


def test_mass_tensor_norm_is_one():
    assert norm_upper_bound(mass_tensor(5)) == pytest.approx(1.0)
    assert norm_lower_bound(mass_tensor(5), iters=1) == pytest.approx(1.0)


def test_single_class_against_witness():
    k = 2
    h = HomogeneousHamiltonian.from_tuples(4, [[k, k, k, k]])
    # delta at k scaled to satisfy both budgets
    a = min(1.0, 1.0 / (1 + k))
    witness = evaluate(h, FourierField.from_modes(4, {k: a}))
    up = norm_upper_bound(h)
    assert up >= witness
    # two exceptional slots need only the l2 budget, so the sup is 1/(1+k)^2
    assert up == pytest.approx(1 / (1 + k) ** 2)
    assert up / witness == pytest.approx((1 + k) ** 2)
    assert norm_lower_bound(h) == pytest.approx(up, rel=1e-9)


def test_budget_validation():
    with pytest.raises(ValueError):
        norm_upper_bound(mass_tensor(2), C1=0.0)
    with pytest.raises(ValueError):
        norm_lower_bound(mass_tensor(2), iters=0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 4, 6]), st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_lower_never_exceeds_upper(seed, degree, C1, C2):
    h = random_tensor(4, degree, 15, np.random.default_rng(seed))
    b = norm_bounds(h, C1, C2, iters=4, seed=seed)
    assert 0.0 <= b.lower <= b.upper * (1 + 1e-12)


def test_lower_bound_is_deterministic():
    h = random_tensor(4, 4, 20, np.random.default_rng(3))
    assert norm_lower_bound(h, seed=5) == norm_lower_bound(h, seed=5)


# ----------------------------------------------------------------------------


def _resonant_quartic(M, K):
    return split_resonant(make_nls_nonlinearity(1, M), K)[0]


def test_hh_empty():
    t = hh_terms([], random_field(4, np.random.default_rng(0)), MultiplierSpec(2, 1.5), free_weights(4))
    assert (t.v1, t.v2, t.v3) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("mu", [0.0, 0.8])
def test_hh_cancellation_on_low_frequencies(mu):
    M, N = 6, 3
    R = _resonant_quartic(M, 4)
    c = random_field(M, np.random.default_rng(1)).coeffs.copy()
    c[np.abs(np.arange(-M, M + 1)) > N] = 0
    t = hh_terms(R, FourierField(M, c), MultiplierSpec(N, 2.0), free_weights(M, mu))
    assert abs(t.v1 + t.v2) <= 1e-10 * t.scale
    assert abs(t.v3) <= 1e-10 * t.scale


def test_hh_sum_is_time_derivative_of_modified_energy():
    M = 5
    R = _resonant_quartic(M, 2)
    w = free_weights(M)
    spec = MultiplierSpec(2, 1.7)
    q = random_field(M, np.random.default_rng(3), scale=0.3)
    D = apply_multiplier(FourierField(M, np.ones(2 * M + 1)), spec).coeffs.real

    def energy(x):
        return float(np.sum(D ** 2 * w * np.abs(x) ** 2)) + evaluate(R, D * x)

    v = 1j * (w * q.coeffs + gradient_bar(R, q).coeffs)
    def central(eps):
        return (energy(q.coeffs + eps * v) - energy(q.coeffs - eps * v)) / (2 * eps)

    fd = (4 * central(1e-5) - central(2e-5)) / 3
    assert hh_terms(R, q, spec, w).total() == pytest.approx(fd, rel=1e-7)


def test_hh1_matches_raw_tuple_sum():
    M = 4
    R = _resonant_quartic(M, 4)
    spec = MultiplierSpec(2, 2.0)
    q = random_field(M, np.random.default_rng(8))
    tuples, coeffs = R.raw_tuples()
    m = apply_multiplier(FourierField(M, np.ones(2 * M + 1)), spec).coeffs.real
    n = tuples
    Rn = (m[n[:, 0::2] + M] ** 2 * n[:, 0::2] ** 2).sum(1) - (m[n[:, 1::2] + M] ** 2 * n[:, 1::2] ** 2).sum(1)
    qa = q.coeffs
    mono = np.prod(qa[n[:, 0::2] + M], axis=1) * np.prod(np.conj(qa[n[:, 1::2] + M]), axis=1)
    direct = -1j * np.sum(coeffs * Rn * mono)
    assert hh_terms(R, q, spec, free_weights(M)).v1 == pytest.approx(direct.real, rel=1e-12)
    # same sum at class level
    classwise = -1j * np.sum(R.coeffs * class_R(R, spec) * monomials(R, q))
    assert classwise.real == pytest.approx(direct.real, rel=1e-12)
