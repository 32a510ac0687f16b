from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import assume, given, settings, strategies as st

from cqed_entanglement import (DegenerateCorrelation, HilbertSpace, SystemParams,
                               build_effective_hamiltonian, closed_form_array, concurrence_closed_form,
                               correlation_set, detuned_amplitudes, dressed_state_projection,
                               entanglement_report, resonant_amplitudes, schwarz_test,
                               witness_identity_check)
from cqed_entanglement.analytics import solve_weak_drive
from cqed_entanglement.model import EXCITED, GROUND

rates = st.floats(0.05, 20.0)
drives = st.floats(1e-4, 1e-1)


def random_params(n, seed):
    rng = np.random.default_rng(seed)
    g = 10 ** rng.uniform(-2, 1.3, n)
    kappa = 10 ** rng.uniform(-2, 1.3, n)
    gamma = 10 ** rng.uniform(-1, 1, n)
    eps = 10 ** rng.uniform(-5, -1, n)
    return [SystemParams(*map(float, x)) for x in zip(g, kappa, gamma, eps)]


# -- worked point, evaluated by hand in exact arithmetic ---------------------

def hand_values():
    g, kappa, gamma, eps = Fraction(1), Fraction(1, 2), Fraction(1), Fraction(1, 100)
    c1 = g**2 / (kappa * gamma)
    c1p = c1 * 2 * kappa / (2 * kappa + gamma)
    p = 1 - 2 * c1p
    q = (1 + 2 * c1) / (1 + 2 * c1 - 2 * c1p)
    alpha = eps / (kappa * (1 + 2 * c1))
    beta_abs = 2 * g / gamma * alpha
    xi = 2 * g / (gamma * (1 + 2 * c1) ** 2) * (q - 1)
    conc = 2 * (eps / kappa) ** 2 * xi
    return dict(c1=c1, c1p=c1p, p=p, q=q, alpha=alpha, beta_abs=beta_abs, xi=xi, conc=conc)


def test_hand_values_are_the_quoted_numbers():
    h = hand_values()
    assert (h["c1"], h["c1p"], h["p"], h["q"]) == (2, 1, -1, Fraction(5, 3))
    assert h["alpha"] == Fraction(4, 1000) and h["beta_abs"] == Fraction(8, 1000)
    assert h["xi"] == Fraction(4, 75)
    assert float(h["conc"]) == pytest.approx(4.2667e-5, rel=1e-4)


def test_resonant_worked_point(worked):
    h = hand_values()
    amps = resonant_amplitudes(worked)
    assert amps.c1 == pytest.approx(float(h["c1"]), rel=1e-12)
    assert amps.c1p == pytest.approx(float(h["c1p"]), rel=1e-12)
    assert amps.p == pytest.approx(float(h["p"]), rel=1e-12)
    assert amps.q == pytest.approx(float(h["q"]), rel=1e-12)
    assert abs(amps.alpha) == pytest.approx(float(h["alpha"]), rel=1e-12)
    assert abs(amps.beta) == pytest.approx(float(h["beta_abs"]), rel=1e-12)
    assert amps.xi == pytest.approx(float(h["xi"]), rel=1e-12)
    # derivation phase: dipole amplitude is -i times real
    assert amps.a0e.real == 0 and amps.a0e.imag < 0
    assert amps.a1e == pytest.approx(amps.alpha * amps.beta * amps.q)
    assert amps.a2g == pytest.approx(amps.alpha**2 * amps.p * amps.q / np.sqrt(2))


def test_resonant_rejects_detuning_and_bad_rates(worked):
    with pytest.raises(ValueError):
        resonant_amplitudes(worked.replace(delta=0.1))
    with pytest.raises(ValueError):
        concurrence_closed_form(worked.replace(delta=0.1))


def test_uncoupled_atom():
    amps = resonant_amplitudes(SystemParams(0.0, 0.5, 1.0, 0.01))
    assert amps.c1 == 0 and amps.q == 1 and amps.beta == 0 and amps.xi == 0
    assert entanglement_report(amps).concurrence == 0
    assert concurrence_closed_form(SystemParams(0.0, 0.5, 1.0, 0.01)) == 0
    with pytest.raises(DegenerateCorrelation):
        correlation_set(amps)


def test_eps_doubling(worked):
    a = detuned_amplitudes(worked.replace(delta=0.3))
    b = detuned_amplitudes(worked.replace(delta=0.3, epsilon=0.02))
    assert b.a1g == pytest.approx(2 * a.a1g, rel=1e-13)
    assert b.a0e == pytest.approx(2 * a.a0e, rel=1e-13)
    assert b.a1e == pytest.approx(4 * a.a1e, rel=1e-13)
    assert b.a2g == pytest.approx(4 * a.a2g, rel=1e-13)
    ca = entanglement_report(a).concurrence
    assert entanglement_report(b).concurrence == pytest.approx(4 * ca, rel=1e-13)
    assert concurrence_closed_form(worked.replace(epsilon=0.02)) == pytest.approx(
        4 * concurrence_closed_form(worked), rel=1e-15)


def test_detuned_reduces_to_resonant():
    for p in random_params(200, 11):
        r = resonant_amplitudes(p)
        d = detuned_amplitudes(p)
        for name in ("a1g", "a0e", "a2g", "a1e"):
            assert getattr(d, name) == pytest.approx(getattr(r, name), rel=1e-12, abs=1e-300)
        assert d.xi == pytest.approx(r.xi, rel=1e-10)


def test_undriven_detuned_keeps_ratios(worked):
    amps = detuned_amplitudes(worked.replace(epsilon=0.0, delta=0.7))
    ref = detuned_amplitudes(worked.replace(delta=0.7))
    assert amps.a1g == 0 and amps.a1e == 0
    assert amps.q == pytest.approx(ref.q)
    assert amps.p == pytest.approx(ref.p)


def test_amplitudes_match_manifold_blocks_of_heff():
    # Independent route: steady state of the no-jump evolution with the
    # vacuum amplitude pinned to 1, one manifold at a time, read straight
    # off the operator matrices.
    space = HilbertSpace(2)
    rng = np.random.default_rng(5)
    vac = [space.index(0, GROUND)]
    one = [space.index(1, GROUND), space.index(0, EXCITED)]
    two = [space.index(2, GROUND), space.index(1, EXCITED)]
    for _ in range(100):
        g, kappa, gamma = 10 ** rng.uniform(-1, 1, 3)
        p = SystemParams(g, kappa, gamma, 1e-3, rng.uniform(-5, 5))
        h = build_effective_hamiltonian(p, space)
        v1 = -np.linalg.solve(h[np.ix_(one, one)], h[np.ix_(one, vac)])[:, 0]
        v2 = -np.linalg.solve(h[np.ix_(two, two)], h[np.ix_(two, one)] @ v1)
        amps = detuned_amplitudes(p)
        assert np.allclose([amps.a1g, amps.a0e], v1, rtol=1e-12, atol=0)
        assert np.allclose([amps.a2g, amps.a1e], v2, rtol=1e-11, atol=0)


def test_solve_weak_drive_broadcasts():
    g = np.linspace(0.1, 3, 7)
    out = solve_weak_drive(g[:, None], 0.5, 1.0, 1e-3, np.array([0.0, 1.0]))
    assert all(x.shape == (7, 2) for x in out)
    single = solve_weak_drive(g[3], 0.5, 1.0, 1e-3, 1.0)
    assert out[3][3, 1] == pytest.approx(complex(single[3]))


# -- entanglement measures ----------------------------------------------------

def test_worked_concurrence(worked):
    amps = resonant_amplitudes(worked)
    rep = entanglement_report(amps)
    assert rep.concurrence == pytest.approx(8e-4 / 18.75, rel=1e-12)
    assert rep.concurrence == pytest.approx(concurrence_closed_form(worked), rel=1e-12)
    assert rep.concurrence_xi == pytest.approx(rep.concurrence, rel=1e-12)
    assert rep.lambda1 == pytest.approx((rep.concurrence / 2) ** 2)
    assert rep.lambda1 + rep.lambda2 == 1.0


def test_closed_form_random_draws():
    for p in random_params(1000, 2024):
        rep = entanglement_report(resonant_amplitudes(p))
        cf = concurrence_closed_form(p)
        assert rep.concurrence == pytest.approx(cf, rel=1e-10)
        assert rep.concurrence_xi == pytest.approx(cf, rel=1e-10)


def test_closed_form_small_g_cubic():
    g = np.array([1e-4, 2e-4])
    c = closed_form_array(g, 0.5, 1.0, 1.0)
    assert c[1] / c[0] == pytest.approx(8.0, rel=1e-6)


def test_product_state_is_unentangled(worked):
    amps = resonant_amplitudes(worked)
    prod = amps.with_amplitudes(a1e=amps.a1g * amps.a0e)
    rep = entanglement_report(prod)
    assert rep.concurrence == 0 and rep.entropy == 0
    corr = correlation_set(prod)
    assert corr.g2_tf == pytest.approx(1, abs=1e-12)
    assert corr.h_tf == pytest.approx(1, abs=1e-12)


def test_harmonic_oscillator_surrogate(worked):
    # q = 1 and p = 1: field and dipole behave as coupled oscillators
    amps = resonant_amplitudes(worked)
    osc = amps.with_amplitudes(a1e=amps.a1g * amps.a0e, a2g=amps.a1g**2 / np.sqrt(2))
    assert osc.q == pytest.approx(1) and osc.p == pytest.approx(1)
    corr = correlation_set(osc)
    for v in (corr.g1_tf, corr.g2_tf, corr.h_tf, corr.g2_tt):
        assert v == pytest.approx(1, abs=1e-12)
    assert not corr.schwarz_violated


def test_entropy_small_concurrence(worked):
    for eps in (1e-2, 1e-3, 1e-4):
        rep = entanglement_report(resonant_amplitudes(worked.replace(epsilon=eps)))
        lam = rep.lambda1
        assert rep.entropy == pytest.approx(-lam * (np.log2(lam) - 1 / np.log(2)), rel=1e-6)


def test_entropy_leading_order_within_validity(worked):
    # The leading form drops log2(xi^2) - 1/ln2 next to log2((eps/kappa)^4),
    # so its relative error shrinks only logarithmically in eps.
    errs = []
    for eps in (1e-6, 1e-8, 1e-10):
        p = worked.replace(epsilon=eps)
        assert p.is_weak(1e-6)
        rep = entanglement_report(resonant_amplitudes(p))
        x4 = (eps / p.kappa) ** 4
        dropped = np.log2(p.xi**2) - 1 / np.log(2)
        predicted = abs(dropped / (np.log2(x4) + dropped))
        err = abs(rep.entropy_leading - rep.entropy) / rep.entropy
        assert err == pytest.approx(predicted, rel=1e-4)
        errs.append(err)
    assert errs[0] < 0.15
    assert errs == sorted(errs, reverse=True)


# -- correlations -------------------------------------------------------------

def test_worked_correlations(worked):
    corr = correlation_set(resonant_amplitudes(worked))
    assert corr.g1_tf == pytest.approx(1, rel=1e-12)
    assert corr.g2_tf == pytest.approx(25 / 9, rel=1e-12)
    assert corr.h_tf == pytest.approx(5 / 3, rel=1e-12)
    assert corr.g2_tt == pytest.approx(25 / 9, rel=1e-12)
    assert corr.g2_ff == 0
    assert corr.schwarz_lhs == pytest.approx((16 / 9) ** 2, rel=1e-12)
    assert corr.schwarz_rhs == pytest.approx(16 / 9, rel=1e-12)
    assert corr.schwarz_violated


def test_schwarz_test_boundary():
    s = schwarz_test(1.0, 1.0, 1.0)
    assert s.lhs == 0 and s.rhs == 0 and not s.violated


@settings(max_examples=300, deadline=None)
@given(g=rates, kappa=rates, gamma=rates, eps=drives)
def test_witness_chain(g, kappa, gamma, eps):
    amps = resonant_amplitudes(SystemParams(g, kappa, gamma, eps))
    corr = correlation_set(amps)
    assert corr.g2_tf == pytest.approx(corr.h_tf**2, rel=1e-10)
    assert corr.g2_tt == pytest.approx((amps.p.real * corr.h_tf) ** 2, rel=1e-9, abs=1e-12)
    assert corr.h_tf == pytest.approx(amps.q.real, rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(g=rates, kappa=rates, gamma=rates, eps=drives, delta=st.floats(-20, 20))
def test_q_is_convention_free(g, kappa, gamma, eps, delta):
    amps = detuned_amplitudes(SystemParams(g, kappa, gamma, eps, delta))
    # global rephasing of the atom leaves the ratio and the measures untouched
    ph = np.exp(0.7j)
    rot = amps.with_amplitudes(a0e=amps.a0e * ph, a1e=amps.a1e * ph)
    assert rot.q_complex == pytest.approx(amps.q_complex, rel=1e-12)
    # the defect is a difference of nearly equal products; roundoff scales with them
    scale = abs(amps.a1g * amps.a0e)
    assert entanglement_report(rot).concurrence == pytest.approx(
        entanglement_report(amps).concurrence, rel=1e-12, abs=1e-13 * scale)


@settings(max_examples=300, deadline=None)
@given(g=rates, kappa=rates, gamma=rates, eps=drives, s=st.floats(-1, 1))
def test_factorization_iff_zero(g, kappa, gamma, eps, s):
    assume(s == 0 or abs(s) > 1e-9)
    amps = resonant_amplitudes(SystemParams(g, kappa, gamma, eps))
    assume(amps.a0e != 0)
    mixed = amps.with_amplitudes(a1e=amps.a1g * amps.a0e * (1 + s))
    rep = entanglement_report(mixed)
    corr = correlation_set(mixed)
    assert corr.g2_tf == pytest.approx((1 + s) ** 2, rel=1e-12)
    assert (rep.factorization_defect == 0) == (s == 0)
    assert (rep.concurrence == 0) == (s == 0)
    assert (abs(corr.g2_tf - 1) < 1e-12) == (s == 0)


def test_witness_identity_worked(worked):
    chk = witness_identity_check(worked)
    assert chk.c_from_witness == pytest.approx(2 * 0.004 * 0.008 * (2 / 3), rel=1e-12)
    assert chk.c_from_witness == pytest.approx(chk.c_direct, rel=1e-12)


def test_witness_identity_random_draws():
    for p in random_params(1000, 99):
        chk = witness_identity_check(p)
        assert chk.c_from_witness == pytest.approx(chk.c_direct, rel=1e-10)


def test_witness_identity_uncoupled():
    chk = witness_identity_check(SystemParams(0.0, 1.0, 1.0, 0.01))
    assert chk.c_from_witness == 0 == chk.c_direct


# -- detuning -----------------------------------------------------------------

@pytest.fixture(scope="module")
def large_detuning_coefficient():
    # Leading large-detuning behaviour of a1g a0e - a1e, from a symbolic
    # no-jump Hamiltonian assembled here from scratch.
    g, k, G, e, D = sympy.symbols("g kappa gamma epsilon Delta", positive=True)
    af = sympy.Matrix(3, 3, lambda i, j: sympy.sqrt(j) if j == i + 1 else 0)
    low = sympy.Matrix([[0, 1], [0, 0]])
    a = sympy.kronecker_product(af, sympy.eye(2))
    sm = sympy.kronecker_product(sympy.eye(3), low)
    ad, sp = a.H, sm.H
    h = (g * (ad * sm + a * sp) + sympy.I * e * (ad - a) + D * (ad * a + sp * sm)
         - sympy.I * k * ad * a - sympy.I * G / 2 * sp * sm)
    one, two = [2, 1], [4, 3]
    v1 = -h.extract(one, one).LUsolve(h.extract(one, [0]))
    v2 = -h.extract(two, two).LUsolve(h.extract(two, one) * v1)
    defect = sympy.simplify(v1[0] * v1[1] - v2[1])
    lead = sympy.simplify(sympy.limit(defect * D**5, D, sympy.oo))
    return sympy.lambdify((g, k, G, e), lead), sympy.lambdify((g, k, G, e, D), defect)


def test_symbolic_defect_matches(large_detuning_coefficient):
    _, defect = large_detuning_coefficient
    for p in random_params(20, 3):
        p = p.replace(delta=1.7)
        assert abs(defect(p.g, p.kappa, p.gamma, p.epsilon, p.delta)) == pytest.approx(
            detuned_amplitudes(p).factorization_defect, rel=1e-9)


def test_concurrence_falls_as_fifth_power(large_detuning_coefficient):
    lead, _ = large_detuning_coefficient
    for g, kappa, gamma in ((1, 0.5, 1), (2, 10, 1), (0.3, 0.2, 2)):
        coef = 2 * abs(lead(g, kappa, gamma, 1.0))
        assert coef == pytest.approx(g**3)
        big = 1e4 * max(g, kappa, gamma)
        c = entanglement_report(detuned_amplitudes(SystemParams(g, kappa, gamma, 1.0, big))).concurrence
        assert c * big**5 == pytest.approx(coef, rel=1e-3)


def test_detuning_symmetry():
    p = SystemParams(1.3, 0.4, 1.0, 1e-3)
    for d in (0.5, 1.3, 7.0):
        cp = entanglement_report(detuned_amplitudes(p.replace(delta=d))).concurrence
        cm = entanglement_report(detuned_amplitudes(p.replace(delta=-d))).concurrence
        assert cp == pytest.approx(cm, rel=1e-12)


def test_entanglement_persists_at_vacuum_rabi_detuning():
    p = SystemParams(3.0, 0.5, 1.0, 1e-3)
    c0 = entanglement_report(detuned_amplitudes(p)).concurrence
    cg = entanglement_report(detuned_amplitudes(p.replace(delta=p.g))).concurrence
    c_far = entanglement_report(detuned_amplitudes(p.replace(delta=30 * p.g))).concurrence
    assert cg > 0.1 * c0
    assert cg > 1e3 * c_far


def test_detuned_h_is_real_part():
    amps = detuned_amplitudes(SystemParams(1.0, 0.5, 1.0, 1e-3, 0.8))
    corr = correlation_set(amps)
    assert amps.q_complex.imag != 0
    assert corr.h_tf == pytest.approx(amps.q_complex.real)
    assert corr.q_complex == pytest.approx(amps.q_complex)


# -- dressed states -----------------------------------------------------------

def test_dressed_weights_sum_to_one_excitation_norm():
    for d in (-2.0, -0.5, 0.0, 1.0):
        amps = detuned_amplitudes(SystemParams(1.5, 0.5, 1.0, 1e-3, d))
        pr = dressed_state_projection(amps)
        total = abs(amps.a1g) ** 2 + abs(amps.a0e) ** 2
        assert pr.weight_plus + pr.weight_minus == pytest.approx(total, rel=1e-12)


def test_dressed_branch_selection():
    p = SystemParams(10.0, 0.5, 1.0, 1e-3)
    lower = dressed_state_projection(detuned_amplitudes(p.replace(delta=-p.g)))
    upper = dressed_state_projection(detuned_amplitudes(p.replace(delta=p.g)))
    assert lower.branch == +1 and upper.branch == -1
    assert np.sqrt(lower.weight_minus / lower.weight_plus) < 0.2
    assert np.sqrt(upper.weight_plus / upper.weight_minus) < 0.2
    assert abs(lower.gamma1) == pytest.approx(abs(upper.gamma1))


def test_gamma1_on_ridge_when_field_and_dipole_decay_match():
    # with 2 kappa = gamma both dressed components decay at gamma/2 and the
    # driven one has amplitude eps / (sqrt2 kappa) independent of g
    for g in (0.1, 0.5, 1.0, 4.0, 20.0):
        pr = dressed_state_projection(detuned_amplitudes(SystemParams(g, 0.5, 1.0, 1e-4, -g)))
        assert abs(pr.gamma1) == pytest.approx(1 / np.sqrt(2), rel=1e-10)


def test_dressed_projection_needs_drive():
    with pytest.raises(ValueError):
        dressed_state_projection(detuned_amplitudes(SystemParams(1.0, 0.5, 1.0, 0.0, -1.0)))
