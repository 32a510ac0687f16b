"""Physical parameters, the truncated atom-field space and its operators.

Conventions used everywhere in the package:

* hbar = 1 and all rates are dimensionless, measured in units of the
  atomic decay rate ``gamma`` unless the caller says otherwise.
* Tensor ordering is field-major, atom-minor: the basis state
  ``|n, s>`` (``s = 0`` ground, ``s = 1`` excited) sits at flat index
  ``2 * n + s``.
* Solvers work in the frame rotating at the drive frequency. Atom and
  cavity are resonant with each other and detuned from the drive by
  ``delta``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

GROUND, EXCITED = 0, 1


@dataclass(frozen=True)
class SystemParams:
    """One operating point of the driven atom-cavity system.

    Parameters
    ----------
    g : atom-field coupling rate.
    kappa : cavity field decay rate (field energy leaves at ``2 * kappa``).
    gamma : atomic spontaneous emission rate.
    epsilon : classical drive amplitude.
    delta : common atom/cavity detuning from the drive.
    """

    g: float
    kappa: float
    gamma: float = 1.0
    epsilon: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        for name in ("g", "kappa", "gamma", "epsilon", "delta"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def in_units_of_gamma(self) -> "SystemParams":
        """Rescale all rates so that ``gamma == 1``."""
        s = 1.0 / self.gamma
        return SystemParams(self.g * s, self.kappa * s, 1.0, self.epsilon * s, self.delta * s)

    @property
    def c1(self) -> float:
        """Single-atom cooperativity g^2 / (kappa gamma)."""
        return self.g**2 / (self.kappa * self.gamma)

    @property
    def c1_prime(self) -> float:
        return self.c1 * 2 * self.kappa / (2 * self.kappa + self.gamma)

    @property
    def xi(self) -> float:
        """Resonant entanglement parameter; concurrence is 2 (eps/kappa)^2 |xi|."""
        c1, c1p = self.c1, self.c1_prime
        q = (1 + 2 * c1) / (1 + 2 * c1 - 2 * c1p)
        return 2 * self.g / (self.gamma * (1 + 2 * c1) ** 2) * (q - 1)

    def is_weak(self, threshold: float = 0.1) -> bool:
        """True when (eps/kappa)^2 <= threshold * |xi|.

        This is the condition under which the leading-order entropy
        formula applies. With ``g == 0`` xi vanishes and only an
        undriven system counts as weak.
        """
        return (self.epsilon / self.kappa) ** 2 <= threshold * abs(self.xi)


class HilbertSpace:
    """Truncated Fock space of the cavity mode times a two-level atom."""

    def __init__(self, n_max: int = 4):
        if int(n_max) != n_max or n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {n_max!r}")
        self.n_max = int(n_max)

    def __repr__(self):
        return f"HilbertSpace(n_max={self.n_max})"

    def __eq__(self, other):
        return isinstance(other, HilbertSpace) and other.n_max == self.n_max

    def __hash__(self):
        return hash(("HilbertSpace", self.n_max))

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)

    def index(self, n: int, atom: int) -> int:
        if not 0 <= n <= self.n_max or atom not in (GROUND, EXCITED):
            raise IndexError(f"state |{n},{atom}> outside {self!r}")
        return 2 * n + atom

    def label(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.dim:
            raise IndexError(index)
        return divmod(index, 2)

    def basis(self, n: int, atom: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(n, atom)] = 1.0
        return v

    def require_two_excitations(self):
        if self.n_max < 2:
            raise ValueError("two-excitation physics needs n_max >= 2")

    @cached_property
    def photon_numbers(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_max + 1), 2).astype(float)

    @cached_property
    def atom_levels(self) -> np.ndarray:
        return np.tile([0.0, 1.0], self.n_max + 1)

    def excitations(self) -> np.ndarray:
        """Total excitation number of each basis state."""
        return self.photon_numbers + self.atom_levels


class Operators(NamedTuple):
    a: np.ndarray
    a_dagger: np.ndarray
    sigma_minus: np.ndarray
    sigma_plus: np.ndarray


def build_operators(space: HilbertSpace) -> Operators:
    """Ladder operators of the field and the atom on the product space."""
    n = space.n_max + 1
    a_field = np.diag(np.sqrt(np.arange(1, n)), k=1).astype(complex)
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    a = np.kron(a_field, np.eye(2))
    sm = np.kron(np.eye(n), lower)
    return Operators(a, a.conj().T.copy(), sm, sm.conj().T.copy())


def hermitian_hamiltonian(params: SystemParams, space: HilbertSpace) -> np.ndarray:
    """Coupling + drive + detuning, in the drive frame."""
    ops = build_operators(space)
    a, ad, sm, sp = ops
    h = params.g * (ad @ sm + a @ sp)
    h = h + 1j * params.epsilon * (ad - a)
    h = h + params.delta * (ad @ a + sp @ sm)
    return h


# Printed prefactors sqrt(kappa), sqrt(gamma/2) do not reproduce the damping
# terms of the non-Hermitian Hamiltonian; "printed" exists as a negative control.
JUMP_CONVENTIONS = {
    "consistent": (2.0, 1.0),
    "printed": (1.0, 0.5),
}


def jump_operators(params: SystemParams, space: HilbertSpace,
                   convention: str = "consistent") -> list[np.ndarray]:
    """Collapse operators ``[mirror, side]``.

    With the default convention they are ``sqrt(2 kappa) a`` and
    ``sqrt(gamma) sigma_-`` so that the field amplitude decays at kappa
    and the dipole at gamma / 2.
    """
    try:
        ck, cg = JUMP_CONVENTIONS[convention]
    except KeyError:
        raise ValueError(f"unknown jump convention {convention!r}") from None
    ops = build_operators(space)
    return [np.sqrt(ck * params.kappa) * ops.a, np.sqrt(cg * params.gamma) * ops.sigma_minus]


def build_effective_hamiltonian(params: SystemParams, space: HilbertSpace,
                                convention: str = "consistent") -> np.ndarray:
    """Non-Hermitian no-jump Hamiltonian H - (i/2) sum C^dag C."""
    h = hermitian_hamiltonian(params, space)
    for c in jump_operators(params, space, convention):
        h = h - 0.5j * (c.conj().T @ c)
    return h


class DressedBasis:
    """Unitary change of basis to the dressed states |n,+-> = (|n,g> +- |n-1,e>)/sqrt(2).

    ``matrix`` has the dressed states as columns in the bare basis. Column
    ordering: ``|0,g>`` first, then ``|n,+>, |n,->`` for n = 1..n_max and
    finally the unpaired ``|n_max,e>`` (its partner ``|n_max+1,g>`` is
    truncated away).
    """

    def __init__(self, space: HilbertSpace):
        self.space = space
        dim = space.dim
        u = np.zeros((dim, dim), dtype=complex)
        u[space.index(0, GROUND), 0] = 1.0
        col = 1
        self._columns = {(0, 0): 0}
        s = 1 / np.sqrt(2)
        for n in range(1, space.n_max + 1):
            for sign in (+1, -1):
                u[space.index(n, GROUND), col] = s
                u[space.index(n - 1, EXCITED), col] = sign * s
                self._columns[(n, sign)] = col
                col += 1
        u[space.index(space.n_max, EXCITED), col] = 1.0
        self.matrix = u

    def column(self, n: int, sign: int) -> int:
        return self._columns[(n, sign)]

    def state(self, n: int, sign: int) -> np.ndarray:
        return self.matrix[:, self.column(n, sign)].copy()

    def to_dressed(self, psi: np.ndarray) -> np.ndarray:
        return self.matrix.conj().T @ psi

    def to_bare(self, coefficients: np.ndarray) -> np.ndarray:
        return self.matrix @ coefficients
