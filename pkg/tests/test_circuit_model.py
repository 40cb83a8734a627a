import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from readout_eme.circuit_model import (
    CircuitParams,
    critical_photon_number,
    normal_modes,
    quadratic_blocks,
    readout_params,
)
from readout_eme.errors import ConfigError, DegenerateDetuning, NonPositiveDefinite


def brute_force_frequencies(params):
    # Heisenberg equations give  d^2 Xb/dt^2 = -16 B A Xb
    A, B = quadratic_blocks(params)
    return np.sort(np.sqrt(np.linalg.eigvals(16 * B @ A).real))


def test_readout_frequencies():
    nm = normal_modes(readout_params())
    assert nm.omega_q == pytest.approx(2.40947, abs=1e-5)
    assert nm.omega_c == pytest.approx(3.14893, abs=1e-5)


def test_readout_mixing_coefficients():
    nm = normal_modes(readout_params())
    assert np.allclose(nm.u, [[0.99241, 0.12088], [-0.09279, 0.99553]], atol=1e-5)
    assert np.allclose(nm.v, [[0.99634, 0.09286], [-0.12098, 0.99321]], atol=1e-5)


def test_frequencies_match_dynamical_matrix():
    p = readout_params()
    nm = normal_modes(p)
    assert np.allclose(sorted([nm.omega_q, nm.omega_c]), brute_force_frequencies(p), rtol=1e-12)


def test_decoupled_limit():
    p = CircuitParams(2.0, 3.0, 0.0, 0.1)
    nm = normal_modes(p)
    assert np.allclose(nm.u, np.eye(2)) and np.allclose(nm.v, np.eye(2))
    assert nm.omega_q == pytest.approx(2.0) and nm.omega_c == pytest.approx(3.0)
    assert critical_photon_number(p) == math.inf


def test_labels_follow_overlap_when_qubit_is_above_cavity():
    nm = normal_modes(CircuitParams(3.5, 3.0, 0.05, 0.1))
    assert nm.omega_q > nm.omega_c
    assert abs(nm.u_aa) > abs(nm.u_ca) and nm.u_aa > 0 and nm.u_cc > 0


def test_critical_photon_number():
    assert critical_photon_number(readout_params()) == pytest.approx(21.16, abs=1e-2)
    g = 0.1
    p = CircuitParams(1.0, 1.0 + 2 * g * 5, g, 0.1)
    assert critical_photon_number(p) == pytest.approx(25.0)


def test_degenerate_detuning():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(DegenerateDetuning):
            critical_photon_number(CircuitParams(1.0, 1.0, 0.01, 0.1))


def test_non_positive_definite():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = CircuitParams(1.0, 1.2, 0.6, 0.1)
    with pytest.raises(NonPositiveDefinite):
        normal_modes(p)


def test_dispersive_warning():
    with pytest.warns(UserWarning, match="dispersive"):
        CircuitParams(1.0, 1.2, 0.1, 0.1)


@pytest.mark.parametrize("field,value", [("epsilon", -0.1), ("epsilon", 1.0), ("g", -0.1),
                                         ("omega_a_bar", 0.0), ("kappa_flat", float("nan"))])
def test_invalid_params(field, value):
    with pytest.raises(ConfigError) as exc:
        readout_params(**{field: value})
    assert exc.value.to_dict()["field"] == field


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.5, 3.0),
    st.floats(0.5, 3.0),
    st.floats(0.0, 0.2),
)
def test_diagonalization_properties(wa, wc, gfrac):
    if abs(wa - wc) < 0.05:
        return
    g = gfrac * abs(wa - wc)
    p = CircuitParams(wa, wc, g, 0.1)
    nm = normal_modes(p)
    A, B = quadratic_blocks(p)
    D = np.diag([nm.omega_q, nm.omega_c]) / 4
    assert np.allclose(nm.u.T @ A @ nm.u, D, atol=1e-12)
    assert np.allclose(nm.v.T @ B @ nm.v, D, atol=1e-12)
    # Xb = U X and Yb = V Y keep [X, Y] = 2i iff U V^T = 1
    assert np.allclose(nm.u @ nm.v.T, np.eye(2), atol=1e-12)
    assert np.allclose(sorted([nm.omega_q, nm.omega_c]), brute_force_frequencies(p), rtol=1e-10)
    assert nm.u_aa > 0 and nm.u_cc > 0


def test_small_coupling_is_perturbative():
    base = CircuitParams(2.0, 3.0, 0.0, 0.1)
    ratios = [normal_modes(base.with_(g=g)).u_ac / g for g in (1e-4, 2e-4, 4e-4)]
    assert np.allclose(ratios, ratios[0], rtol=1e-3)
    assert normal_modes(base.with_(g=1e-6)).omega_q == pytest.approx(2.0, abs=1e-9)
