"""Lindblad steady state of the driven atom-cavity system.

This is the independent check on the weak-drive formulas: it keeps the
full truncated dynamics at finite drive, so every analytic result should
be recovered with corrections of relative order epsilon^2.

Density matrices are vectorized row-major (``rho.ravel()``), for which
``vec(A rho B) = kron(A, B.T) @ vec(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .analytics import CorrelationSet, WeakDriveAmplitudes, _from_amplitudes
from .exceptions import DegenerateCorrelation, DimensionTooLarge, NonUniqueSteadyState
from .model import (HilbertSpace, SystemParams, build_operators, hermitian_hamiltonian,
                    jump_operators, EXCITED, GROUND)

# complex128 entries of the dim^2 x dim^2 superoperator
DEFAULT_MEMORY_BUDGET = 512 * 2**20
POSITIVITY_TOL = 1e-9


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray
    space: HilbertSpace

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def hermiticity_defect(self) -> float:
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        herm = 0.5 * (self.matrix + self.matrix.conj().T)
        return np.linalg.eigvalsh(herm)

    def is_physical(self, tol: float = 1e-10, positivity_tol: float = POSITIVITY_TOL) -> bool:
        return (abs(self.trace - 1) <= tol
                and self.hermiticity_defect <= tol
                and self.eigenvalues().min() >= -positivity_tol)

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(op @ self.matrix))

    def reduced_atom(self) -> np.ndarray:
        n = self.space.n_max + 1
        return np.einsum("iaib->ab", self.matrix.reshape(n, 2, n, 2))

    def reduced_field(self) -> np.ndarray:
        n = self.space.n_max + 1
        return np.einsum("iaja->ij", self.matrix.reshape(n, 2, n, 2))


@dataclass(frozen=True)
class Liouvillian:
    matrix: np.ndarray
    space: HilbertSpace
    hamiltonian: np.ndarray
    jumps: list = field(default_factory=list)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.space.dim
        return (self.matrix @ rho.reshape(d * d)).reshape(d, d)


def _superop_left_right(a, b):
    # rho -> a rho b
    return np.kron(a, b.T)


def build_liouvillian(params: SystemParams, space: HilbertSpace, *,
                      jump_convention: str = "consistent",
                      memory_budget: int = DEFAULT_MEMORY_BUDGET) -> Liouvillian:
    """Dense Lindblad generator for the Hermitian Hamiltonian and both jump channels."""
    d = space.dim
    nbytes = 16 * d**4
    if nbytes > memory_budget:
        raise DimensionTooLarge(f"Liouvillian for dim={d} needs {nbytes} bytes > budget {memory_budget}")
    h = hermitian_hamiltonian(params, space)
    jumps = jump_operators(params, space, jump_convention)
    eye = np.eye(d)
    lmat = -1j * (_superop_left_right(h, eye) - _superop_left_right(eye, h))
    for c in jumps:
        cdc = c.conj().T @ c
        lmat += _superop_left_right(c, c.conj().T)
        lmat -= 0.5 * (_superop_left_right(cdc, eye) + _superop_left_right(eye, cdc))
    return Liouvillian(lmat, space, h, jumps)


def steady_state(liouvillian: Liouvillian, *, uniqueness_tol: float = 1e-10) -> DensityOperator:
    """Stationary state from a bordered linear solve.

    One redundant row of L is replaced by the trace functional, turning
    L vec(rho) = 0, tr rho = 1 into a square nonsingular system.
    """
    lmat = liouvillian.matrix
    d = liouvillian.space.dim
    scale = np.linalg.norm(lmat, 2)
    sv = scipy.linalg.svdvals(lmat)
    if sv.size > 1 and sv[-2] <= uniqueness_tol * scale:
        nullity = int(np.sum(sv <= uniqueness_tol * scale))
        raise NonUniqueSteadyState(f"Liouvillian nullspace has dimension {nullity}")
    bordered = lmat.copy()
    bordered[0, :] = np.eye(d).ravel()
    rhs = np.zeros(d * d, dtype=complex)
    rhs[0] = 1.0
    rho = np.linalg.solve(bordered, rhs).reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho)
    residual = np.linalg.norm(lmat @ rho.ravel())
    if residual > 1e-10 * max(scale, 1.0):
        raise RuntimeError(f"steady-state residual {residual:.3e} too large")
    return DensityOperator(rho, liouvillian.space)


def solve(params: SystemParams, n_max: int = 4, **kwargs) -> DensityOperator:
    """Convenience: build the Liouvillian and return its steady state."""
    space = HilbertSpace(n_max)
    return steady_state(build_liouvillian(params, space, **kwargs))


@dataclass(frozen=True)
class SteadyStateObservables:
    mean_field: complex
    mean_photon: float
    excited_pop: float
    dipole_field: complex
    dipole: complex
    coincidence: float
    two_photon: float
    field_excited: complex

    @property
    def field_intensity_cross(self) -> float:
        """<(a^dag + a) s+ s->."""
        return 2 * self.field_excited.real


def observables(rho: DensityOperator, space: HilbertSpace | None = None) -> SteadyStateObservables:
    space = space or rho.space
    a, ad, sm, sp = build_operators(space)
    n_op = ad @ a
    e_op = sp @ sm
    return SteadyStateObservables(
        mean_field=rho.expect(a),
        mean_photon=rho.expect(n_op).real,
        excited_pop=rho.expect(e_op).real,
        dipole_field=rho.expect(sp @ a),
        dipole=rho.expect(sp),
        coincidence=rho.expect(sp @ n_op @ sm).real,
        two_photon=rho.expect(ad @ ad @ a @ a).real,
        field_excited=rho.expect(a @ e_op),
    )


def normalized_correlations(obs: SteadyStateObservables) -> CorrelationSet:
    """Finite-drive zero-delay correlations from steady-state moments.

    The homodyne local oscillator is phase locked to the mean transmitted
    field, so ``h_tf`` is Re(e^{-i theta} <a s+s->) / (|<a>| <s+s->) with
    theta = arg <a>; on resonance theta = 0. g2_ff is identically zero
    for a single two-level atom.
    """
    if obs.mean_photon == 0 or obs.excited_pop == 0 or abs(obs.mean_field) == 0 or abs(obs.dipole) == 0:
        raise DegenerateCorrelation("vanishing intensity or mean field")
    g1 = abs(obs.dipole_field) / (abs(obs.dipole) * abs(obs.mean_field))
    g2_tf = obs.coincidence / (obs.mean_photon * obs.excited_pop)
    g2_tt = obs.two_photon / obs.mean_photon**2
    phase = obs.mean_field / abs(obs.mean_field)
    q_complex = obs.field_excited / (obs.mean_field * obs.excited_pop)
    h = (np.conj(phase) * obs.field_excited).real / (abs(obs.mean_field) * obs.excited_pop)
    return CorrelationSet.from_values(g1, g2_tf, h, g2_tt, 0.0, q_complex)


def coherence_amplitudes(rho: DensityOperator, params: SystemParams) -> WeakDriveAmplitudes:
    """Read weak-drive amplitudes off the coherences <ij|rho|0g>.

    For rho close to |psi><psi| with psi = |0g> + ..., the coherence
    with the vacuum is A_ij times the (real, near-unity) vacuum amplitude.
    """
    space = rho.space
    space.require_two_excitations()
    m = rho.matrix
    v = space.index(0, GROUND)
    norm = np.sqrt(m[v, v].real)

    def amp(n, s):
        return m[space.index(n, s), v] / norm

    return _from_amplitudes(params, amp(1, GROUND), amp(0, EXCITED), amp(2, GROUND), amp(1, EXCITED))


@dataclass(frozen=True)
class TruncationReport:
    n_max: list
    values: dict
    deltas: dict
    converged: bool
    tolerance: float

    def max_delta(self) -> list:
        keys = list(self.deltas)
        return [max(self.deltas[k][i] for k in keys) for i in range(len(self.n_max) - 1)]


def _key_observables(params, n_max):
    obs = observables(solve(params, n_max))
    return {
        "mean_field": abs(obs.mean_field),
        "mean_photon": obs.mean_photon,
        "excited_pop": obs.excited_pop,
        "coincidence": obs.coincidence,
        "two_photon": obs.two_photon,
    }


def truncation_convergence(params: SystemParams, n_max_list, tol: float = 1e-8) -> TruncationReport:
    """Recompute key observables for each truncation and report relative changes.

    Converged when the last successive change of every observable is
    below ``tol`` (changes are relative, or absolute for values below 1e-300).
    """
    n_list = list(n_max_list)
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_max_list must be strictly ascending with at least two entries")
    per_n = [_key_observables(params, n) for n in n_list]
    values = {k: [v[k] for v in per_n] for k in per_n[0]}
    deltas = {}
    for k, series in values.items():
        d = []
        for prev, cur in zip(series, series[1:]):
            ref = max(abs(cur), abs(prev))
            d.append(abs(cur - prev) / ref if ref > 1e-300 else abs(cur - prev))
        deltas[k] = d
    converged = all(d[-1] < tol for d in deltas.values())
    return TruncationReport(n_list, values, deltas, converged, tol)
