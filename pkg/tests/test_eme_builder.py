import numpy as np
import pytest

from readout_eme.circuit_model import normal_modes, readout_params
from readout_eme.displacement import drive_amp_for_target_nbar, one_mode_drive_for_nbar
from readout_eme.eme_builder import (
    FAMILIES,
    MASKS,
    PRINCIPAL_TWO_MODE,
    FockJump,
    SpectralDensity,
    apply_mask,
    assemble_eme,
    assemble_kerr_me,
    assemble_one_mode,
    assemble_one_mode_fock,
    build_one_mode,
    build_two_mode,
    family,
    normalize_phase,
    one_mode_fock_rates,
)
from readout_eme.errors import AccidentalDegeneracy, ConfigError
from readout_eme.operator_algebra import STATIC, Monomial, OperatorPoly, ladder, to_matrix
from readout_eme.sw_generator import kerr_coefficients

DIMS = (5, 5)


def readout_params_at(nbar):
    p = readout_params()
    nm = normal_modes(p)
    kf = 0.01 * np.pi / nm.v_cc**2
    chi = kerr_coefficients(nm, p)["chi_ac"]
    p = p.with_(kappa_flat=kf, drive_freq=nm.omega_c - chi / 2)
    return p.with_(drive_amp=drive_amp_for_target_nbar(nbar, nm, p))


@pytest.fixture(scope="module")
def driven():
    return build_two_mode(readout_params_at(1.0))


@pytest.fixture(scope="module")
def undriven():
    return build_two_mode(readout_params_at(0.0))


def static_matrix(op, dims=DIMS):
    return to_matrix(op, 0.0, dims)


def test_spectral_density():
    s = SpectralDensity(0.3)
    assert s(1.0) == 0.6 and s(0.0) == 0.0 and s(-1.0) == 0.0
    assert SpectralDensity(0.3, "flat_all")(-1.0) == 0.6
    with pytest.raises(ConfigError):
        SpectralDensity(0.3, "ohmic")


@pytest.mark.parametrize("mono,fam", [((0, 1, 0, 0), "single_photon"), ((1, 2, 0, 0), "single_photon"),
                                      ((0, 1, 0, 1), "correlated"), ((0, 1, 1, 0), "correlated"),
                                      ((1, 1, 0, 0), "dephasing"), ((0, 2, 0, 0), "multi_photon")])
def test_family(mono, fam):
    assert family(Monomial(*mono)) == fam


@pytest.mark.parametrize("build", ["driven", "undriven"])
def test_reconstruction(build, request):
    b = request.getfixturevalue(build)
    freqs = b.qe.freqs
    H0 = np.diag(to_matrix(b.qe.H2, 0.0, DIMS)).real
    for t in (0.0, 3.7, 91.2):
        lab = to_matrix(b.dressed, t, DIMS, freqs)
        rot = np.exp(1j * H0 * t)
        inter = rot[:, None] * lab * rot.conj()[None, :]
        assert np.abs(b.collapse.reconstruct_matrix(t, DIMS) - inter).max() < 1e-12


def test_negative_frequency_bins_are_adjoints(driven):
    bins = driven.collapse.by_label()
    for lab, b in bins.items():
        partner = bins[tuple(-x for x in lab)]
        assert partner.omega == pytest.approx(-b.omega)
        assert np.abs(static_matrix(partner.op) - static_matrix(b.op).conj().T).max() < 1e-14


def test_principal_bins_lead_with_single_photon(undriven):
    nm = undriven.nm
    linear = build_two_mode(readout_params_at(0.0).with_(epsilon=0.0))
    cq = linear.collapse.get((1, 0, 0)).op
    cc = linear.collapse.get((0, 1, 0)).op
    assert set(cq.monomials()) == {(0, 1, 0, 0)} and set(cc.monomials()) == {(0, 0, 0, 1)}
    assert abs(cq[(0, 1, 0, 0)][STATIC]) == pytest.approx(abs(nm.v_ca), rel=1e-14)
    assert abs(cc[(0, 0, 0, 1)][STATIC]) == pytest.approx(abs(nm.v_cc), rel=1e-14)
    # the anharmonic dressing lowers the single-photon amplitude of the qubit
    dressed = abs(undriven.collapse.get((1, 0, 0)).op[(0, 1, 0, 0)][STATIC])
    assert dressed < abs(nm.v_ca)


def test_undriven_bins_have_no_drive_harmonics(undriven):
    assert all(lab[2] == 0 for lab in undriven.collapse.by_label())


def test_subleading_drive_terms_are_two_orders_smaller(driven, undriven):
    # drive-induced = absent at zero drive; the correlated a c family in C(w_q)
    # and the a^dag a term in C(w_c) should dominate the rest by >= 100
    leads = {(1, 0, 0): {(0, 1, 0, 1), (0, 1, 1, 0)}, (0, 1, 0): {(1, 1, 0, 0)}}
    for lab, lead in leads.items():
        base = set(undriven.collapse.get(lab).op.monomials())
        op = apply_mask(driven.collapse.get(lab).op, FAMILIES)
        induced = {tuple(m): abs(c[STATIC]) for m, c in op.items() if m not in base}
        top = min(induced[m] for m in lead)
        rest = max(v for m, v in induced.items() if m not in lead)
        assert top / rest >= 100


@pytest.mark.parametrize("mask", sorted(MASKS))
def test_masks(driven, mask):
    gen = assemble_eme(driven.collapse, driven.spectral, driven.heff, "principal", mask)
    assert {d.label for d in gen.dissipators} == set(PRINCIPAL_TWO_MODE)
    for d in gen.dissipators:
        assert all(family(m) in MASKS[mask] for m in d.op.monomials())
        assert Monomial(0, 0, 0, 0) not in d.op
        assert d.rate == pytest.approx(2 * driven.spectral.kappa_flat)


def test_apply_mask_drops_identity():
    op = OperatorPoly.from_terms([((0, 0, 0, 0), 1.0), ((0, 1, 0, 0), 1.0)])
    assert apply_mask(op, FAMILIES) == OperatorPoly.from_terms([((0, 1, 0, 0), 1.0)])


def test_normalize_phase():
    op = OperatorPoly.from_terms([((0, 1, 0, 0), 2j), ((0, 1, 0, 1), 0.5)])
    out = normalize_phase(op)
    assert out[(0, 1, 0, 0)][STATIC] == pytest.approx(2.0)
    assert out[(0, 1, 0, 1)][STATIC] == pytest.approx(-0.5j)


def test_bin_selection(driven):
    all_bins = assemble_eme(driven.collapse, driven.spectral, driven.heff, "all")
    positive = assemble_eme(driven.collapse, driven.spectral, driven.heff, "all_positive")
    # zero temperature: negative frequencies carry no rate either way
    assert {d.label for d in all_bins.dissipators} == {d.label for d in positive.dissipators}
    assert all(d.omega > 0 for d in positive.dissipators)
    with pytest.raises(ConfigError):
        assemble_eme(driven.collapse, driven.spectral, driven.heff, "some")
    with pytest.raises(ConfigError):
        assemble_eme(driven.collapse, driven.spectral, driven.heff, "principal", "no-kerr")


def test_kerr_control_generator():
    p = readout_params_at(0.5)
    nm = normal_modes(p)
    gen = assemble_kerr_me(nm, None, p)
    assert gen.frame == "lab"
    rates = {d.name: d.rate for d in gen.dissipators}
    assert rates["D[a]"] == pytest.approx(2 * p.kappa_flat * nm.v_ca**2)
    assert rates["D[c]"] == pytest.approx(2 * p.kappa_flat * nm.v_cc**2)
    drive_labels = {lab for lab in gen.hamiltonian.labels() if lab != STATIC}
    assert drive_labels == {(0, 0, 1), (0, 0, -1)}


def test_one_mode_linear_limit():
    gen = assemble_one_mode(1.0, 0.0, 1.66, 0.005, one_mode_drive_for_nbar(1.0, 1.0, 1.66, 0.005))
    assert len(gen.dissipators) == 1
    (d,) = gen.dissipators
    assert d.rate == pytest.approx(0.01)
    assert d.op == ladder("q")


def test_accidental_degeneracy():
    with pytest.raises(AccidentalDegeneracy):
        build_one_mode(1.0, 0.1, 2.0, 0.005, 0.01)


def test_fock_rates_linear_limit():
    r = one_mode_fock_rates(3, 1.0, 0.0, 1.66, 0.3, SpectralDensity(0.005))
    assert r == {"down": pytest.approx(0.03), "up": 0.0, "phi": 0.0}


def test_fock_jump_matrix():
    m = FockJump(0, 1).to_matrix(trunc=(3, 2))
    assert m.shape == (6, 6) and m[0, 2] == 1 and m[1, 3] == 1 and np.count_nonzero(m) == 2


def test_fock_generator():
    amp = one_mode_drive_for_nbar(1.0, 1.0, 1.66, 0.005)
    gen = assemble_one_mode_fock(1.0, 0.1, 1.66, 0.005, amp, 6)
    names = {d.name for d in gen.dissipators}
    assert {"down1", "down5", "up1", "phi1"} <= names
    assert gen.hamiltonian.labels() == {STATIC}


@pytest.mark.parametrize("nbar", [0.0, 1.0])
def test_fock_rates_match_operator_dissipator(nbar):
    # 2 kappa |<n-1|C(w_q)|n>|^2 agrees with the Fock-resolved down rate to O(eps^2)
    wq, wd, kap = 1.0, 1.66, 0.005
    amp = one_mode_drive_for_nbar(nbar, wq, wd, kap)
    dev = {}
    for eps in (0.1, 0.05):
        b = build_one_mode(wq, eps, wd, kap, amp)
        C = static_matrix(normalize_phase(apply_mask(b.collapse.get((1, 0, 0)).op, FAMILIES)), (8, 1))
        worst = 0.0
        for n in range(1, 5):
            down = one_mode_fock_rates(n, wq, eps, wd, b.eta, SpectralDensity(kap))["down"]
            worst = max(worst, abs(2 * kap * abs(C[n - 1, n]) ** 2 / down - 1))
        assert worst < eps**2
        dev[eps] = worst
    assert 0.2 <= dev[0.05] / dev[0.1] <= 0.3
