"""Closed-form weak-drive steady state, entanglement measures and witnesses.

In the weak-drive limit the conditional steady state is

    |0,g> + A1g |1,g> + A0e |0,e> + A2g |2,g> + A1e |1,e>

with one-excitation amplitudes of order epsilon and two-excitation
amplitudes of order epsilon^2. Everything here is a pure function of
those four numbers.

Phase convention: amplitudes are stored exactly as they come out of the
steady-state equations of the no-jump Hamiltonian, so on resonance
``a0e = -2i g a1g / gamma`` is imaginary relative to ``a1g``. The common
textbook form writes the dipole amplitude as a real number; the two differ
by a rotation of the atomic quadrature that leaves every modulus and the
ratio ``a1e / (a1g a0e)`` untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DegenerateCorrelation
from .model import DressedBasis, HilbertSpace, SystemParams, EXCITED, GROUND

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class WeakDriveAmplitudes:
    params: SystemParams
    a1g: complex
    a0e: complex
    a2g: complex
    a1e: complex
    alpha: complex
    beta: complex
    p: complex
    q: complex
    c1: float
    c1p: float
    xi: float

    @property
    def q_complex(self) -> complex:
        """Ratio a1e / (a1g a0e); real on resonance."""
        return self.a1e / (self.a1g * self.a0e)

    @property
    def factorization_defect(self) -> float:
        return abs(self.a1g * self.a0e - self.a1e)

    def state_vector(self, space: HilbertSpace | None = None) -> np.ndarray:
        """Unnormalized weak-drive state on a truncated space."""
        space = space or HilbertSpace(2)
        space.require_two_excitations()
        psi = np.zeros(space.dim, dtype=complex)
        psi[space.index(0, GROUND)] = 1.0
        psi[space.index(1, GROUND)] = self.a1g
        psi[space.index(0, EXCITED)] = self.a0e
        psi[space.index(2, GROUND)] = self.a2g
        psi[space.index(1, EXCITED)] = self.a1e
        return psi

    def with_amplitudes(self, **amps) -> "WeakDriveAmplitudes":
        """Copy with some of a1g, a0e, a2g, a1e overridden.

        Derived fields are recomputed from the new amplitudes, which makes
        this the way to build surrogate states (product states, q = 1, ...).
        """
        vals = dict(a1g=self.a1g, a0e=self.a0e, a2g=self.a2g, a1e=self.a1e)
        vals.update(amps)
        return _from_amplitudes(self.params, **vals)


def _check_rates(params: SystemParams):
    if params.kappa <= 0 or params.gamma <= 0:
        raise ValueError("kappa and gamma must be positive")


def _from_amplitudes(params, a1g, a0e, a2g, a1e) -> WeakDriveAmplitudes:
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = a1g * a0e
        q = a1e / denom if denom != 0 else 1.0 + 0j
        p = SQRT2 * a2g / (a1g**2 * q) if a1g != 0 and q != 0 else 1.0 + 0j
    defect = abs(a1g * a0e - a1e)
    if params.epsilon > 0:
        xi = defect * (params.kappa / params.epsilon) ** 2
    else:
        xi = 0.0
    return WeakDriveAmplitudes(
        params=params, a1g=complex(a1g), a0e=complex(a0e), a2g=complex(a2g), a1e=complex(a1e),
        alpha=complex(a1g), beta=complex(a0e), p=complex(p), q=complex(q),
        c1=params.c1, c1p=params.c1_prime, xi=float(xi),
    )


def resonant_amplitudes(params: SystemParams) -> WeakDriveAmplitudes:
    """Leading-order amplitudes on resonance from the cooperativity formulas."""
    _check_rates(params)
    if params.delta != 0:
        raise ValueError("resonant_amplitudes requires delta == 0; use detuned_amplitudes")
    g, kappa, gamma, eps = params.g, params.kappa, params.gamma, params.epsilon
    c1 = params.c1
    c1p = params.c1_prime
    alpha = eps / (kappa * (1 + 2 * c1))
    beta = -2j * g / gamma * alpha
    p = 1 - 2 * c1p
    q = (1 + 2 * c1) / (1 + 2 * c1 - 2 * c1p)
    return WeakDriveAmplitudes(
        params=params,
        a1g=complex(alpha), a0e=complex(beta),
        a2g=complex(alpha**2 * p * q / SQRT2), a1e=complex(alpha * beta * q),
        alpha=complex(alpha), beta=complex(beta), p=complex(p), q=complex(q),
        c1=c1, c1p=c1p, xi=params.xi,
    )


def solve_weak_drive(g, kappa, gamma, epsilon, delta):
    """Amplitudes (a1g, a0e, a2g, a1e) from the order-by-order steady state.

    Broadcasts over array inputs. The one-excitation manifold obeys

        (kappa + i delta) a1g + i g a0e = eps
        i g a1g + (gamma/2 + i delta) a0e = 0

    and the two-excitation manifold, sourced by it,

        (2 kappa + 2i delta) a2g + i sqrt2 g a1e = sqrt2 eps a1g
        i sqrt2 g a2g + (kappa + gamma/2 + 2i delta) a1e = eps a0e
    """
    g, kappa, gamma, epsilon, delta = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (g, kappa, gamma, epsilon, delta)))
    m11 = kappa + 1j * delta
    m22 = gamma / 2 + 1j * delta
    m12 = 1j * g
    det1 = m11 * m22 - m12 * m12
    a1g = epsilon * m22 / det1
    a0e = -epsilon * m12 / det1
    n11 = 2 * kappa + 2j * delta
    n22 = kappa + gamma / 2 + 2j * delta
    n12 = 1j * SQRT2 * g
    det2 = n11 * n22 - n12 * n12
    b1 = SQRT2 * epsilon * a1g
    b2 = epsilon * a0e
    a2g = (b1 * n22 - n12 * b2) / det2
    a1e = (n11 * b2 - n12 * b1) / det2
    return a1g, a0e, a2g, a1e


def _solve_weak_drive(g, kappa, gamma, eps, delta):
    return tuple(complex(x) for x in solve_weak_drive(g, kappa, gamma, eps, delta))


def detuned_amplitudes(params: SystemParams) -> WeakDriveAmplitudes:
    """Weak-drive amplitudes at arbitrary detuning.

    Solves the steady state of the no-jump evolution order by order in
    epsilon: a 2x2 system for the one-excitation manifold, then a 2x2
    system for the two-excitation manifold sourced by the first.

    ``p`` and ``q`` are complex off resonance; ``xi`` is the non-negative
    number with concurrence = 2 (eps/kappa)^2 xi.
    """
    _check_rates(params)
    if params.epsilon > 0:
        amps = _solve_weak_drive(params.g, params.kappa, params.gamma, params.epsilon, params.delta)
        return _from_amplitudes(params, *amps)
    # Undriven: all amplitudes vanish, but q and p stay defined by linearity.
    unit = _solve_weak_drive(params.g, params.kappa, params.gamma, 1.0, params.delta)
    ref = _from_amplitudes(params.replace(epsilon=1.0), *unit)
    return WeakDriveAmplitudes(
        params=params, a1g=0j, a0e=0j, a2g=0j, a1e=0j, alpha=0j, beta=0j,
        p=ref.p, q=ref.q, c1=ref.c1, c1p=ref.c1p, xi=ref.xi,
    )


@dataclass(frozen=True)
class EntanglementReport:
    concurrence: float
    entropy: float
    lambda1: float
    lambda2: float
    factorization_defect: float
    concurrence_xi: float
    entropy_leading: float


def _binary_entropy(lam):
    if lam <= 0 or lam >= 1:
        return 0.0
    # log1p keeps the (1 - lam) term, ~lam/ln2, when lam is far below machine epsilon
    return float(-lam * np.log2(lam) - (1 - lam) * np.log1p(-lam) / np.log(2))


def entanglement_report(amps: WeakDriveAmplitudes, eps_over_kappa: float | None = None) -> EntanglementReport:
    """Concurrence, entropy and reduced-state eigenvalues to lowest order.

    ``concurrence_xi`` and ``entropy_leading`` are the same quantities
    written through xi and eps/kappa; the latter drops the log(xi^2)
    correction and is only accurate when (eps/kappa)^2 << |xi|.
    """
    if eps_over_kappa is None:
        eps_over_kappa = amps.params.epsilon / amps.params.kappa
    defect = amps.factorization_defect
    lam1 = defect**2
    lam2 = 1.0 - lam1
    x4 = eps_over_kappa**4
    entropy_leading = float(-x4 * np.log2(x4) * amps.xi**2) if x4 > 0 else 0.0
    return EntanglementReport(
        concurrence=2 * defect,
        entropy=_binary_entropy(lam1),
        lambda1=lam1,
        lambda2=lam2,
        factorization_defect=defect,
        concurrence_xi=2 * eps_over_kappa**2 * abs(amps.xi),
        entropy_leading=entropy_leading,
    )


def concurrence_closed_form(params: SystemParams) -> float:
    """Resonant concurrence as an explicit function of g, kappa, gamma, epsilon."""
    if params.delta != 0:
        raise ValueError("closed form holds only at delta == 0")
    return float(closed_form_array(params.g, params.kappa, params.gamma, params.epsilon))


def closed_form_array(g, kappa, gamma=1.0, epsilon=1.0):
    """Vectorized resonant concurrence; broadcasts over array inputs."""
    g, kappa, gamma, epsilon = np.broadcast_arrays(*map(np.asarray, (g, kappa, gamma, epsilon)))
    return (16 * g**3 * epsilon**2 * kappa
            / ((2 * g**2 + gamma * kappa) ** 2 * (2 * g**2 + kappa * (gamma + 2 * kappa))))


class SchwarzTest(NamedTuple):
    lhs: float
    rhs: float
    violated: bool


def schwarz_test(g2_tf, g2_tt, g2_ff=0.0) -> SchwarzTest:
    """Classical bound (g2_tf - 1)^2 <= |(g2_tt - 1)(g2_ff - 1)|."""
    lhs = float((g2_tf - 1) ** 2)
    rhs = float(abs((g2_tt - 1) * (g2_ff - 1)))
    return SchwarzTest(lhs, rhs, lhs > rhs)


@dataclass(frozen=True)
class CorrelationSet:
    g1_tf: float
    g2_tf: float
    h_tf: float
    g2_tt: float
    g2_ff: float
    schwarz_lhs: float
    schwarz_rhs: float
    schwarz_violated: bool
    q_complex: complex = complex("nan")

    @classmethod
    def from_values(cls, g1_tf, g2_tf, h_tf, g2_tt, g2_ff=0.0, q_complex=complex("nan")):
        s = schwarz_test(g2_tf, g2_tt, g2_ff)
        return cls(float(g1_tf), float(g2_tf), float(h_tf), float(g2_tt), float(g2_ff),
                   s.lhs, s.rhs, s.violated, complex(q_complex))


def correlation_set(amps: WeakDriveAmplitudes) -> CorrelationSet:
    """Zero-delay normalized correlations at leading order in epsilon.

    ``h_tf`` is the homodyne field-intensity correlation with the local
    oscillator locked to the mean transmitted field; it reduces to
    ``Re(q_complex)`` and equals q on resonance.
    """
    a1g, a0e, a2g, a1e = amps.a1g, amps.a0e, amps.a2g, amps.a1e
    if a1g == 0 or a0e == 0:
        raise DegenerateCorrelation("a1g and a0e must be nonzero for normalized correlations")
    q = a1e / (a1g * a0e)
    # <sigma+ a> ~ conj(a0e) a1g, <sigma+> ~ conj(a0e), <a> ~ a1g
    g1 = abs(np.conj(a0e) * a1g) / (abs(a0e) * abs(a1g))
    g2_tf = abs(a1e) ** 2 / abs(a1g * a0e) ** 2
    g2_tt = 2 * abs(a2g) ** 2 / abs(a1g) ** 4
    return CorrelationSet.from_values(g1, g2_tf, q.real, g2_tt, 0.0, q)


class WitnessCheck(NamedTuple):
    c_from_witness: float
    c_direct: float


def witness_identity_check(params: SystemParams) -> WitnessCheck:
    """Rebuild the concurrence from measurable quantities.

    Mean transmitted and fluorescent intensities fix |alpha| and |beta|,
    the conditioned homodyne correlation fixes q, and
    C = 2 |alpha beta| |h - 1|.
    """
    amps = resonant_amplitudes(params)
    n_t = abs(amps.a1g) ** 2
    n_f = abs(amps.a0e) ** 2
    direct = entanglement_report(amps).concurrence
    if n_t == 0 or n_f == 0:
        return WitnessCheck(0.0, direct)
    h = correlation_set(amps).h_tf
    return WitnessCheck(2 * np.sqrt(n_t * n_f) * abs(h - 1), direct)


class DressedProjection(NamedTuple):
    weight_plus: float
    weight_minus: float
    gamma1: complex
    gamma2: complex
    branch: int


def dressed_state_projection(amps: WeakDriveAmplitudes) -> DressedProjection:
    """One- and two-excitation content in the dressed basis.

    ``weight_plus`` / ``weight_minus`` are |<1,+|psi>|^2 and |<1,-|psi>|^2.
    ``branch`` is the dominant sign; with H = +g(a^dag s- + a s+) and the
    detuning added as +delta (a^dag a + s+ s-), |1,+> is driven resonantly
    at delta = -g and |1,-> at delta = +g.

    ``gamma1`` and ``gamma2`` are the dominant-branch amplitudes of |1,s>
    and |2,s> in units of the empty-cavity field eps/kappa and its square.
    """
    p = amps.params
    if p.epsilon == 0:
        raise ValueError("dressed projection needs a nonzero drive")
    basis = DressedBasis(HilbertSpace(2))
    c = basis.to_dressed(amps.state_vector(basis.space))
    plus1, minus1 = c[basis.column(1, +1)], c[basis.column(1, -1)]
    w_plus, w_minus = abs(plus1) ** 2, abs(minus1) ** 2
    branch = +1 if w_plus >= w_minus else -1
    unit = p.epsilon / p.kappa
    return DressedProjection(
        weight_plus=float(w_plus),
        weight_minus=float(w_minus),
        gamma1=complex(c[basis.column(1, branch)] / unit),
        gamma2=complex(c[basis.column(2, branch)] / unit**2),
        branch=branch,
    )
