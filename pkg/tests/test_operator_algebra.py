import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from readout_eme.errors import DegreeOverflow, TruncationTooSmall
from readout_eme.operator_algebra import (
    IDENTITY,
    STATIC,
    Frequencies,
    HarmonicCoeff,
    Monomial,
    OperatorPoly,
    commutator,
    dagger,
    from_text,
    identity,
    ladder,
    number,
    quadrature_x,
    quadrature_y,
    split_number_conserving,
    time_derivative,
    to_matrix,
    to_text,
)

FREQS = Frequencies(1.3, 2.9, 0.7)
DIMS = (8, 8)
KEEP = 3  # compare on n_q, n_c < KEEP, far from the truncation edge

labels = st.tuples(*(st.integers(-2, 2) for _ in range(3)))
amps = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
coeffs = st.dictionaries(labels, amps, min_size=1, max_size=3).map(HarmonicCoeff)


def monomials(max_deg):
    return st.tuples(*(st.integers(0, 2) for _ in range(4))).filter(lambda e: sum(e) <= max_deg)


def polys(max_deg=2):
    return st.dictionaries(monomials(max_deg), coeffs, max_size=4).map(OperatorPoly)


def interior(M, dims=DIMS, keep=KEEP):
    idx = [i * dims[1] + j for i in range(keep) for j in range(keep)]
    return M[np.ix_(idx, idx)]


def mat(P, t=0.37):
    return to_matrix(P, t, DIMS, FREQS)


# ---------------------------------------------------------------- examples

def test_annihilation_creation_product():
    a, ad = ladder("q"), ladder("q", dag=True)
    assert a * ad == number("q") + identity()


def test_binomial_square():
    X = quadrature_x("q")
    expect = OperatorPoly.from_terms([((2, 0, 0, 0), 1), ((0, 2, 0, 0), 1), ((1, 1, 0, 0), 2), ((0, 0, 0, 0), 1)])
    assert X * X == expect


def test_number_commutator_counts_photons():
    M = OperatorPoly({(3, 1, 0, 0): 1.0})
    assert commutator(number("q"), M) == M.scale(2.0)


def test_quadrature_commutator():
    assert commutator(quadrature_x("q"), quadrature_y("q")) == OperatorPoly.scalar(2j)
    assert not commutator(quadrature_x("q"), quadrature_y("c"))


def test_split_of_fourth_power():
    S, N = split_number_conserving(quadrature_x("q") ** 4)
    assert S == OperatorPoly.from_terms([((2, 2, 0, 0), 6), ((1, 1, 0, 0), 12), (IDENTITY, 3)])
    assert all(not m.conserving for m in N.monomials())


def test_split_of_identity():
    S, N = split_number_conserving(identity())
    assert S == identity() and not N


def test_small_matrices():
    assert np.allclose(to_matrix(ladder("q"), 0, (3, 1)), np.diag([1, np.sqrt(2)], 1))
    assert np.allclose(to_matrix(number("q"), 0, (4, 1)), np.diag([0, 1, 2, 3]))


def test_tensor_ordering_is_qubit_major():
    n_c = to_matrix(number("c"), 0, (2, 3))
    assert np.allclose(np.diag(n_c).real, [0, 1, 2, 0, 1, 2])


def test_truncation_too_small():
    with pytest.raises(TruncationTooSmall):
        to_matrix(OperatorPoly({(0, 3, 0, 0): 1.0}), 0, (3, 1))


def test_degree_cap():
    with pytest.raises(DegreeOverflow):
        OperatorPoly({(4, 3, 0, 0): 1.0})


def test_harmonic_evaluation():
    h = HarmonicCoeff({STATIC: 1.0, (0, 0, -1): 0.5j})
    t = 0.8
    assert abs(h.evaluate(t, FREQS) - (1 + 0.5j * np.exp(-1j * 0.7 * t))) < 1e-15
    with pytest.raises(ValueError):
        h.evaluate(t, None)


def test_time_derivative():
    P = OperatorPoly({(1, 0, 0, 0): HarmonicCoeff({(0, 1, 1): 2.0})})
    t = 0.4
    d = time_derivative(P, FREQS)[(1, 0, 0, 0)].evaluate(t, FREQS)
    assert abs(d - 2.0 * 1j * 3.6 * np.exp(1j * 3.6 * t)) < 1e-13


# ---------------------------------------------------------------- properties

@settings(max_examples=40, deadline=None)
@given(polys(), polys())
def test_product_matches_matrix_oracle(A, B):
    lhs = interior(mat(A * B))
    rhs = interior(mat(A) @ mat(B))
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()))


@settings(max_examples=40, deadline=None)
@given(polys(), polys())
def test_commutator_matches_matrix_oracle(A, B):
    lhs = interior(mat(commutator(A, B)))
    rhs = interior(mat(A) @ mat(B) - mat(B) @ mat(A))
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()))


@settings(max_examples=25, deadline=None)
@given(polys(2), polys(2), polys(2))
def test_associativity(A, B, C):
    left = mat((A * B) * C, 1.1)
    right = mat(A * (B * C), 1.1)
    assert np.allclose(left, right, atol=1e-12 * (1 + np.abs(left).max()))


@settings(max_examples=40, deadline=None)
@given(polys(), polys(), polys())
def test_distributivity(A, B, C):
    assert np.allclose(mat(A * (B + C)), mat(A * B + A * C), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(polys(3))
def test_dagger_involution(P):
    assert dagger(dagger(P)) == P


@settings(max_examples=40, deadline=None)
@given(polys(), polys())
def test_dagger_reverses_products(A, B):
    lhs = mat(dagger(A * B))
    rhs = mat(dagger(B) * dagger(A))
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(lhs).max()))


@settings(max_examples=40, deadline=None)
@given(polys(3), st.floats(0, 20))
def test_dagger_is_matrix_adjoint(P, t):
    assert np.allclose(to_matrix(dagger(P), t, DIMS, FREQS), to_matrix(P, t, DIMS, FREQS).conj().T)


@settings(max_examples=40, deadline=None)
@given(polys(3), st.floats(0, 20))
def test_antihermitian_part(P, t):
    A = P - dagger(P)
    total = A + dagger(A)
    assert all(abs(c.evaluate(t, FREQS)) < 1e-12 for _, c in total.items())


@settings(max_examples=40, deadline=None)
@given(polys(4))
def test_split_is_exhaustive_and_idempotent(P):
    S, N = split_number_conserving(P)
    assert S + N == P
    assert split_number_conserving(S) == (S, OperatorPoly())
    assert split_number_conserving(N) == (OperatorPoly(), N)


@settings(max_examples=40, deadline=None)
@given(coeffs, coeffs, amps, st.floats(0, 30))
def test_harmonic_linear_and_conjugate(h1, h2, s, t):
    lhs = (h1 + h2.scale(s)).evaluate(t, FREQS)
    assert abs(lhs - (h1.evaluate(t, FREQS) + s * h2.evaluate(t, FREQS))) < 1e-11
    assert abs(h1.conj().evaluate(t, FREQS) - h1.evaluate(t, FREQS).conjugate()) < 1e-12


@settings(max_examples=40, deadline=None)
@given(polys(4))
def test_text_round_trip(P):
    assert from_text(to_text(P)) == P
    assert to_text(from_text(to_text(P))) == to_text(P)
