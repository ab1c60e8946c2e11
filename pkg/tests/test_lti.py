import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from posfilter.lti import (
    DimensionError,
    PlantSpec,
    SingularResolventError,
    StateSpace,
    UnstableSystemError,
    assemble_error_system,
    frequency_response,
    is_nonnegative,
    default_disturbance,
    simulate,
    spectral_radius,
)

from .conftest import random_filter, random_stable

# largest real root of the characteristic cubic of the plant A, by Cardano's formula
RHO_PLANT_A = 0.59000629364967516
# exact rational solve of (I - A_f) X = B_f for the best published filter
G_AT_ONE = np.array([0.012429971788646754, -0.042993791017727406])


def test_spectral_radius_trivial():
    assert spectral_radius(np.zeros((3, 3))) == 0.0
    assert spectral_radius(np.eye(2)) == 1.0
    assert spectral_radius(np.zeros((0, 0))) == 0.0


def test_spectral_radius_plant_matches_cubic_roots(plant):
    assert spectral_radius(plant.A) == pytest.approx(RHO_PLANT_A, rel=1e-12)


def test_spectral_radius_rejects_nonsquare():
    with pytest.raises(DimensionError):
        spectral_radius(np.zeros((2, 3)))


def test_is_nonnegative(best_filter):
    assert is_nonnegative([[0, 1], [2, 3]])
    assert not is_nonnegative([[-1e-12]])
    assert is_nonnegative([[-1e-12]], tol=1e-9)
    assert is_nonnegative(best_filter.Bhat)


def test_statespace_validates_shapes():
    with pytest.raises(DimensionError):
        StateSpace(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        StateSpace([[np.nan]], [[1.0]], [[1.0]], [[0.0]])
    static = StateSpace(np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((1, 0)), [[1.0, 2.0]])
    assert (static.n, static.q, static.p) == (0, 2, 1)


def test_plant_spec_rejects_unstable():
    with pytest.raises(UnstableSystemError):
        PlantSpec.from_matrices([[1.2]], [[1.0]], [[1.0]], [[0.0]], [[1.0]], [[0.0]])


def test_plant_split(plant):
    assert (plant.n, plant.q, plant.p, plant.m) == (3, 2, 2, 1)
    np.testing.assert_array_equal(plant.L, [[1.0, 0.0, 0.0]])
    np.testing.assert_array_equal(plant.G, [[0.0, 0.0]])
    assert plant.B[1, 0] == 0.3850
    assert plant.is_positive()


def test_error_system_dimensions(plant, best_filter):
    e = assemble_error_system(plant, best_filter)
    assert e.A.shape == (4, 4) and e.B.shape == (4, 2)
    assert e.C.shape == (1, 4) and e.D.shape == (1, 2)


def test_zero_filter_passes_plant_output(plant):
    from posfilter.design import FilterParams

    zero = FilterParams(np.zeros((1, 1)), np.zeros((1, 2)), np.zeros((1, 1)), np.zeros((1, 2)))
    e = assemble_error_system(plant, zero)
    np.testing.assert_array_equal(e.C, np.hstack([plant.L, [[0.0]]]))
    np.testing.assert_array_equal(e.D, plant.G)


@pytest.mark.parametrize("order", [0, 1, 2, 3])
def test_error_system_block_structure(plant, order):
    rng = np.random.default_rng(order)
    filt = random_filter(rng, order)
    e = assemble_error_system(plant, filt)
    n = plant.n
    assert (e.n, e.q, e.p) == (n + order, plant.q, plant.m)
    np.testing.assert_array_equal(e.A[:n, :n], plant.A)
    np.testing.assert_array_equal(e.A[:n, n:], 0.0)
    np.testing.assert_array_equal(e.A[n:, n:], filt.Ahat)


def test_error_system_dimension_mismatch(plant):
    from posfilter.design import FilterParams

    wrong = FilterParams([[0.1]], [[1.0, 1.0, 1.0]], [[1.0]], [[1.0, 1.0, 1.0]])
    with pytest.raises(DimensionError):
        assemble_error_system(plant, wrong)


@given(seed=st.integers(0, 2**32 - 1), order=st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_error_system_stable_iff_filter_stable(plant, seed, order):
    rng = np.random.default_rng(seed)
    Ah = rng.uniform(0, 1.5, (order, order))
    filt = random_filter(rng, order)
    from posfilter.design import FilterParams

    filt = FilterParams(Ah, filt.Bhat, filt.Chat, filt.Dhat)
    e = assemble_error_system(plant, filt)
    assert e.is_stable() == (spectral_radius(Ah) < 1)


def test_frequency_response_static():
    D = [[1.0, -2.0]]
    static = StateSpace(np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((1, 0)), D)
    np.testing.assert_array_equal(frequency_response(static, 0.7), np.array(D, dtype=complex))


def test_frequency_response_scalar_geometric_series():
    a, b = 0.6, 2.5
    sys = StateSpace([[a]], [[b]], [[1.0]], [[0.0]])
    assert frequency_response(sys, 0.0)[0, 0] == pytest.approx(b / (1 - a), rel=1e-14)


def test_frequency_response_error_system_at_dc(plant, best_filter):
    G = frequency_response(assemble_error_system(plant, best_filter), 0.0)
    assert G.shape == (1, 2)
    np.testing.assert_allclose(G[0], G_AT_ONE, rtol=1e-12)


def test_frequency_response_singular():
    sys = StateSpace([[1.0]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(SingularResolventError):
        frequency_response(sys, 0.0)


@given(seed=st.integers(0, 2**32 - 1), omega=st.floats(0, np.pi))
@settings(max_examples=50, deadline=None)
def test_frequency_response_conjugate_symmetry(seed, omega):
    sys = random_stable(np.random.default_rng(seed), 3, 2, 2)
    Gp = frequency_response(sys, omega)
    Gm = frequency_response(sys, -omega)
    np.testing.assert_allclose(Gm, np.conj(Gp), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 3.0])
def test_output_scaling(plant, best_filter, alpha):
    e = assemble_error_system(plant, best_filter)
    es = e.scaled_output(alpha)
    np.testing.assert_allclose(frequency_response(es, 1.1), alpha * frequency_response(e, 1.1), rtol=1e-14)
    xi0 = [0.03, 0.08, 0.10, 0.05]
    t, ts = simulate(e, xi0, default_disturbance, 50), simulate(es, xi0, default_disturbance, 50)
    np.testing.assert_allclose(ts.outputs, alpha * t.outputs, rtol=1e-14, atol=0)


def test_simulate_zero(backend, plant, best_filter):
    e = assemble_error_system(plant, best_filter)
    tr = simulate(e, np.zeros(4), np.zeros((30, 2)), 30)
    assert tr.states.shape == (31, 4) and tr.outputs.shape == (30, 1)
    assert np.all(tr.outputs == 0)


def test_simulate_static(backend):
    D = np.array([[2.0, -1.0]])
    static = StateSpace(np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((1, 0)), D)
    W = np.random.default_rng(1).normal(size=(10, 2))
    tr = simulate(static, [], W, 10)
    np.testing.assert_allclose(tr.outputs, W @ D.T, rtol=1e-15)


def test_simulate_matches_recursion(backend, plant, lls10_filter):
    e = assemble_error_system(plant, lls10_filter)
    xi = np.array([0.03, 0.08, 0.10, 0.05])
    tr = simulate(e, xi, default_disturbance, 20)
    for k in range(20):
        w = default_disturbance(k)
        np.testing.assert_allclose(tr.outputs[k], e.C @ xi + e.D @ w, rtol=1e-13, atol=1e-15)
        xi = e.A @ xi + e.B @ w
    np.testing.assert_allclose(tr.states[-1], xi, rtol=1e-13)


@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(-10, 10))
@settings(max_examples=30, deadline=None)
def test_simulate_linearity(seed, alpha):
    rng = np.random.default_rng(seed)
    sys = random_stable(rng, 4, 2, 2)
    W = rng.normal(size=(40, 2))
    a = simulate(sys, np.zeros(4), W, 40).outputs
    b = simulate(sys, np.zeros(4), alpha * W, 40).outputs
    np.testing.assert_allclose(b, alpha * a, rtol=1e-12, atol=1e-12 * (1 + np.abs(a).max()))


def test_simulate_length_mismatch(plant, best_filter):
    e = assemble_error_system(plant, best_filter)
    with pytest.raises(DimensionError):
        simulate(e, np.zeros(3), default_disturbance, 5)
    with pytest.raises(DimensionError):
        simulate(e, np.zeros(4), np.zeros((4, 2)), 5)


def test_default_disturbance():
    np.testing.assert_allclose(default_disturbance(0), [1.0, 1.0])
    np.testing.assert_allclose(default_disturbance(4), [0.5, np.exp(-0.08)])
