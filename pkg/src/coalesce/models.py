"""Lattice Hamiltonians split into a Hermitian part and a non-Hermitian part.

Site labels handed to or returned from this module are 1-based, matching the
usual lattice notation; matrix indices are 0-based and the ``SiteMap`` of each
model is the only place the two are converted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Hashable

import numpy as np

from .numkit import SparseOperator

FAMILIES = (
    "ring",
    "ring_with_hop",
    "kspace_ring",
    "ladder",
    "ssh_chain",
    "ssh_cylinder",
    "two_site",
)

INFINITE = "INFINITE"
EP_COUPLING = 4.0 / math.pi

_DELTA_EDGE = 1e-3


class InvalidSpecError(ValueError):
    """Model parameters violate a construction precondition."""


# ---------------------------------------------------------------------------
# Site maps and states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SiteMap:
    """Bijection between lattice labels and matrix indices.

    ``labels[i]`` is the label of matrix index ``i``; ``grid[i]`` is a
    1-based ``(row, col)`` pair used for tabular output.
    """

    labels: tuple
    grid: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})
        if len(self._index) != len(self.labels):
            raise ValueError("site labels must be unique")

    @classmethod
    def chain(cls, n: int) -> "SiteMap":
        return cls(tuple(range(1, n + 1)), tuple((1, j) for j in range(1, n + 1)))

    @classmethod
    def rows_cols(cls, rows: int, cols: int) -> "SiteMap":
        labels = tuple((j, l) for j in range(1, rows + 1) for l in range(1, cols + 1))
        return cls(labels, labels)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: Hashable) -> int:
        if isinstance(label, list):
            label = tuple(label)
        try:
            return self._index[label]
        except KeyError:
            raise InvalidSpecError(f"unknown site label {label!r}") from None

    def label(self, i: int):
        return self.labels[i]


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over the sites of a lattice."""

    amplitudes: np.ndarray
    site_map: SiteMap

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if a.shape[0] != self.site_map.dim:
            raise ValueError(f"amplitude length {a.shape[0]} != site count {self.site_map.dim}")
        if not np.all(np.isfinite(a)):
            raise ValueError("state has non-finite amplitudes")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def dim(self) -> int:
        return self.site_map.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return self.with_amplitudes(self.amplitudes / n)

    def probabilities(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return p / p.sum()

    def with_amplitudes(self, amplitudes) -> "StateVector":
        return StateVector(np.asarray(amplitudes, dtype=np.complex128), self.site_map)

    def amplitude(self, label) -> complex:
        return complex(self.amplitudes[self.site_map.index(label)])

    def overlap(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, _amps(other)))


def _amps(v) -> np.ndarray:
    return np.asarray(getattr(v, "amplitudes", v), dtype=np.complex128)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelPair:
    """Hermitian part ``H0`` and non-Hermitian part ``Hp`` of one model."""

    H0: SparseOperator
    Hp: SparseOperator
    site_map: SiteMap
    family: str
    params: dict
    periodic: bool = False
    warnings: tuple = ()

    @property
    def dim(self) -> int:
        return self.H0.dim

    @property
    def H(self) -> SparseOperator:
        return self.H0 + self.Hp

    def dense(self) -> np.ndarray:
        return self.H.to_dense()

    def state(self, amplitudes) -> StateVector:
        return StateVector(amplitudes, self.site_map)

    def basis_state(self, label) -> StateVector:
        a = np.zeros(self.dim, dtype=np.complex128)
        a[self.site_map.index(label)] = 1.0
        return self.state(a)

    def with_hp_scaled(self, factor: complex) -> "ModelPair":
        return replace(self, Hp=self.Hp.scaled(factor))


class _Bonds:
    """Accumulates Hermitian bonds so that ``H0`` is symmetric by construction."""

    def __init__(self, dim: int):
        self.dim = dim
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[complex] = []

    def onsite(self, i: int, e: float):
        self.rows.append(i)
        self.cols.append(i)
        self.vals.append(complex(e))

    def hop(self, i: int, j: int, t: complex):
        """Add ``t |i><j| + conj(t) |j><i|``."""
        self.rows += [i, j]
        self.cols += [j, i]
        self.vals += [complex(t), complex(t).conjugate()]

    def directed(self, i: int, j: int, t: complex):
        self.rows.append(i)
        self.cols.append(j)
        self.vals.append(complex(t))

    def op(self) -> SparseOperator:
        return SparseOperator(
            self.dim,
            np.array(self.rows, dtype=np.int64),
            np.array(self.cols, dtype=np.int64),
            np.array(self.vals, dtype=np.complex128),
        )


def _require(cond: bool, msg: str):
    if not cond:
        raise InvalidSpecError(msg)


def _int_param(value, name: str, minimum: int) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise InvalidSpecError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    _require(value >= minimum, f"{name} must be >= {minimum}, got {value}")
    return value


def _delta_param(delta: float) -> tuple[float, tuple]:
    delta = float(delta)
    _require(0.0 < delta < 1.0, f"delta must be in (0,1), got {delta}")
    warns = ()
    if delta < _DELTA_EDGE or delta > 1.0 - _DELTA_EDGE:
        warns = (f"delta={delta} is close to the edge of (0,1); edge modes are nearly degenerate limits",)
    return delta, warns


def edge_ratio(delta: float) -> float:
    """Cell-to-cell amplitude ratio ``(delta - 1) / (delta + 1)`` of SSH edge modes."""
    return (delta - 1.0) / (delta + 1.0)


# -- ring -------------------------------------------------------------------


def build_ring(N_half: int) -> ModelPair:
    """Uniform ring of ``2 * N_half`` sites with unit hopping; ``Hp`` is empty."""
    N_half = _int_param(N_half, "N_half", 2)
    L = 2 * N_half
    b = _Bonds(L)
    for j in range(L):
        b.hop(j, (j + 1) % L, 1.0)
    return ModelPair(
        b.op(), SparseOperator.zeros(L), SiteMap.chain(L), "ring", {"N_half": N_half}, periodic=True
    )


def attach_unidirectional(model: ModelPair, l0: int, r: int, kappa: complex) -> ModelPair:
    """Add ``kappa |l0><l0 + r|`` to ``Hp`` (1-based sites, wrapped on rings)."""
    L = model.dim
    l0 = int(l0)
    r = int(r)
    _require(1 <= l0 <= L, f"l0={l0} outside 1..{L}")
    target = l0 + r
    if model.periodic:
        target = (target - 1) % L + 1
    else:
        _require(1 <= target <= L, f"l0 + r = {target} outside 1..{L} on an open chain")
    _require(target != l0, "unidirectional hop needs two distinct sites")
    kappa = complex(kappa)
    hp = model.Hp
    if kappa != 0:
        hp = hp + SparseOperator.from_triplets(L, [(l0 - 1, target - 1, kappa)])
    params = dict(model.params)
    params.update({"l0": l0, "r": r, "kappa": kappa})
    family = "ring_with_hop" if model.family == "ring" else model.family
    return replace(model, Hp=hp, params=params, family=family)


def build_ring_with_hop(N_half: int, l0: int, r: int, kappa: complex) -> ModelPair:
    _require(int(r) >= 1, f"r must be >= 1, got {r}")
    return attach_unidirectional(build_ring(N_half), l0, r, kappa)


def ring_momenta(N_half: int) -> np.ndarray:
    """Allowed momenta ``pi n / N_half`` for ``n = 1 .. 2 N_half``."""
    return np.pi * np.arange(1, 2 * N_half + 1) / N_half


def plane_wave(L: int, k: float) -> np.ndarray:
    j = np.arange(1, L + 1)
    return np.exp(1j * k * j) / np.sqrt(L)


def _grid_index(N_half: int, k: float) -> int:
    n = k * N_half / np.pi
    n_round = round(n)
    if abs(n - n_round) > 1e-9:
        raise InvalidSpecError(f"k={k} is not on the grid pi*n/{N_half}")
    return n_round


def ring_pair_states(N_half: int, k: float, l0: int) -> tuple[StateVector, StateVector]:
    """Degenerate pair ``(|k> +/- exp(2ikl0)|-k>) / sqrt 2``.

    ``psi_minus`` vanishes at site ``l0``; ``psi_plus`` vanishes at
    ``l0 + r`` whenever ``cos(k r) = 0``.
    """
    N_half = _int_param(N_half, "N_half", 2)
    L = 2 * N_half
    n = _grid_index(N_half, k) % L
    _require(n not in (0, N_half), f"k={k} has no degenerate partner (k = 0 or pi)")
    k = np.pi * n / N_half
    _require(1 <= int(l0) <= L, f"l0={l0} outside 1..{L}")
    phase = np.exp(2j * k * l0)
    kp = plane_wave(L, k)
    km = plane_wave(L, -k)
    sm = SiteMap.chain(L)
    plus = StateVector((kp + phase * km) / np.sqrt(2.0), sm)
    minus = StateVector((kp - phase * km) / np.sqrt(2.0), sm)
    return plus, minus


def admissible_k(r: int, N_half: int | None = None) -> list[float]:
    """Momenta in (0, pi) with ``cos(k r) = 0``; optionally restricted to a ring grid."""
    r = _int_param(r, "r", 1)
    ks = [(2 * m + 1) * np.pi / (2 * r) for m in range(r)]
    ks = [k for k in ks if 0.0 < k < np.pi]
    if N_half is None:
        return ks
    out = []
    for k in ks:
        n = k * N_half / np.pi
        if abs(n - round(n)) < 1e-9:
            out.append(np.pi * round(n) / N_half)
    return out


# -- momentum-space coupling ------------------------------------------------


def dft_basis(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Columns are ``|k>`` for ``k = 2 pi n / L`` folded into (-pi, pi]."""
    n = np.arange(L)
    k = 2 * np.pi * n / L
    k = np.where(k > np.pi + 1e-12, k - 2 * np.pi, k)
    j = np.arange(1, L + 1)
    F = np.exp(1j * np.outer(j, k)) / np.sqrt(L)
    return F, k


def build_kspace_ring(N_sites: int, kappa: complex) -> ModelPair:
    """Uniform ring plus ``kappa * sum_{0<k<pi} |k><-k|`` mapped to the site basis."""
    N_sites = _int_param(N_sites, "N_sites", 4)
    L = N_sites
    b = _Bonds(L)
    for j in range(L):
        b.hop(j, (j + 1) % L, 1.0)
    F, ks = dft_basis(L)
    D = np.zeros((L, L), dtype=np.complex128)
    for a, k in enumerate(ks):
        if 1e-12 < k < np.pi - 1e-12:
            partner = int(np.argmin(np.abs(ks + k)))
            D[a, partner] = kappa
    Hp = F @ D @ F.conj().T
    return ModelPair(
        b.op(),
        SparseOperator.from_dense(Hp),
        SiteMap.chain(L),
        "kspace_ring",
        {"N_sites": N_sites, "kappa": complex(kappa)},
        periodic=True,
    )


def kspace_coupling_cot(N_sites: int, kappa: complex = 1.0) -> np.ndarray:
    """Closed-form cotangent approximation of the momentum-space coupling.

    Entries ``(kappa/N) i cot((l+j) pi / N)`` on both ``(l, j)`` and
    ``(j, l)`` for odd ``l + j``, and ``kappa / 2`` where ``l + j`` is ``N``
    or ``2N``.  The odd-sum term is placed symmetrically: a Hermitian
    conjugate there would make the operator Hermitian.  Even-sum entries of
    order ``kappa / N`` are dropped, so the result differs from the exact
    construction by at most ``|kappa| / N`` entrywise.
    """
    N = _int_param(N_sites, "N_sites", 4)
    C = np.zeros((N, N), dtype=np.complex128)
    for l in range(1, N + 1):
        for j in range(1, N + 1):
            m = l + j
            if m % 2 == 1 and l > j:
                v = kappa * 1j / (N * math.tan(m * math.pi / N))
                C[l - 1, j - 1] += v
                C[j - 1, l - 1] += v
            if m in (N, 2 * N):
                C[l - 1, j - 1] += kappa / 2.0
    return C


def cot_coupling(N: int, Delta: int) -> float:
    """``(1/N) cot(Delta pi / N)``."""
    return 1.0 / (N * math.tan(Delta * math.pi / N))


def cot_coupling_limit(Delta: int) -> float:
    """Large-N limit ``1 / (pi Delta)`` of :func:`cot_coupling`."""
    return 1.0 / (math.pi * Delta)


# -- ladder -----------------------------------------------------------------


def _ladder_sites(N: int) -> SiteMap:
    labels = []
    grid = []
    for j in range(1, N + 1):
        labels += [("a", j), ("b", j)]
        grid += [(1, j), (2, j)]
    return SiteMap(tuple(labels), tuple(grid))


def build_ladder(N_rungs: int, J: float, n_max: int) -> ModelPair:
    """Two-leg ladder with power-law imaginary inter-leg hopping.

    Long-range partners ``j + 2n - 1`` wrap around the ring of rungs;
    ``n_max`` may not exceed ``N_rungs // 2``.
    """
    N = _int_param(N_rungs, "N_rungs", 2)
    if n_max == INFINITE:
        raise InvalidSpecError("n_max=INFINITE is only available for the analytic Bloch matrix")
    n_max = _int_param(n_max, "n_max", 1)
    _require(n_max <= N // 2, f"n_max={n_max} exceeds N_rungs//2={N // 2}")
    J = float(J)

    def a(j):
        return 2 * ((j - 1) % N)

    def b(j):
        return 2 * ((j - 1) % N) + 1

    h0 = _Bonds(2 * N)
    for j in range(1, N + 1):
        h0.hop(a(j), b(j), 1.0)
        h0.hop(a(j), a(j + 1), 1.0)
        h0.hop(b(j), b(j + 1), 1.0)

    hp = _Bonds(2 * N)
    if J != 0.0:
        for j in range(1, N + 1):
            for n in range(1, n_max + 1):
                m = 2 * n - 1
                c = 0.5j * J / m
                # written terms a+_j b_{j+m} - b+_j a_{j+m} and their adjoints,
                # all multiplied by the same prefactor
                hp.directed(a(j), b(j + m), c)
                hp.directed(b(j), a(j + m), -c)
                hp.directed(b(j + m), a(j), c)
                hp.directed(a(j + m), b(j), -c)
    return ModelPair(
        h0.op(),
        hp.op(),
        _ladder_sites(N),
        "ladder",
        {"N_rungs": N, "J": J, "n_max": n_max},
        periodic=True,
    )


def ladder_delta(k, J: float, n_max) -> np.ndarray:
    """``J * sum_{n<=n_max} sin((2n-1)k)/(2n-1)``; the step limit for ``INFINITE``."""
    k = np.asarray(k, dtype=float)
    if n_max == INFINITE:
        # J / (4/pi) keeps Delta exactly 1 at J = 4/pi
        return (J / EP_COUPLING) * np.sign(k)
    n_max = _int_param(n_max, "n_max", 1)
    m = 2 * np.arange(1, n_max + 1) - 1
    return J * np.sum(np.sin(np.multiply.outer(k, m)) / m, axis=-1)


def ladder_bloch(k: float, J: float, n_max) -> tuple[np.ndarray, tuple[complex, complex]]:
    """Bloch matrix ``[[0, 1-D], [1+D, 0]] + 2 cos k`` and its analytic eigenvalues."""
    d = float(ladder_delta(k, J, n_max))
    c = 2.0 * math.cos(k)
    h = np.array([[c, 1.0 - d], [1.0 + d, c]], dtype=np.complex128)
    root = np.sqrt(complex(1.0 - d * d))
    return h, (c + root, c - root)


def ladder_momenta(N_rungs: int) -> np.ndarray:
    return 2 * np.pi * np.arange(N_rungs) / N_rungs


# -- SSH chain ---------------------------------------------------------------


def build_ssh_chain(N_cells: int, delta: float, kappa: complex) -> ModelPair:
    """Open dimerized chain of ``2 N_cells`` sites with ``kappa |1><2N|``."""
    N = _int_param(N_cells, "N_cells", 2)
    delta, warns = _delta_param(delta)
    L = 2 * N
    b = _Bonds(L)
    for l in range(1, L):
        b.hop(l - 1, l, 0.5 * (1.0 + (-1) ** l * delta))
    kappa = complex(kappa)
    hp = SparseOperator.from_triplets(L, [(0, L - 1, kappa)] if kappa != 0 else [])
    return ModelPair(
        b.op(), hp, SiteMap.chain(L), "ssh_chain",
        {"N_cells": N, "delta": delta, "kappa": kappa}, warnings=warns,
    )


def ssh_edge_modes(N_cells: int, delta: float) -> tuple[StateVector, StateVector]:
    """Left mode on odd sites and right mode on even sites, both unit norm."""
    N = _int_param(N_cells, "N_cells", 1)
    delta, _ = _delta_param(delta)
    rho = edge_ratio(delta)
    omega = (1.0 - rho ** (2 * N)) / (1.0 - rho ** 2)
    L = np.zeros(2 * N, dtype=np.complex128)
    R = np.zeros(2 * N, dtype=np.complex128)
    j = np.arange(1, N + 1)
    L[2 * j - 2] = rho ** (j - 1) / math.sqrt(omega)
    R[2 * j - 1] = rho ** (N - j) / math.sqrt(omega)
    sm = SiteMap.chain(2 * N)
    return StateVector(L, sm), StateVector(R, sm)


def ssh_boundary_residual(N_cells: int, delta: float) -> float:
    """``||H0 |L>||`` for the open chain: ``((1-delta)/2) |rho|^(N-1) / sqrt(Omega)``."""
    rho = edge_ratio(delta)
    omega = (1.0 - rho ** (2 * N_cells)) / (1.0 - rho ** 2)
    return 0.5 * (1.0 - delta) * abs(rho) ** (N_cells - 1) / math.sqrt(omega)


# -- SSH cylinder ------------------------------------------------------------


def build_ssh_cylinder(
    M_rows: int,
    N_cells: int,
    delta: float,
    J_inter: float,
    kappa: complex,
    bond_scale: float = 1.0,
) -> ModelPair:
    """``M_rows`` dimerized rows of ``2 N_cells`` sites, periodically coupled.

    Intra-row bonds are ``bond_scale * [1 + (-1)^l delta]``; pass
    ``bond_scale=0.5`` for the chain convention.  ``Hp`` is
    ``kappa |(1,1)><(M,1)|``.
    """
    M = _int_param(M_rows, "M_rows", 2)
    _require(M % 2 == 0, f"M_rows must be even, got {M}")
    N = _int_param(N_cells, "N_cells", 1)
    delta, warns = _delta_param(delta)
    C = 2 * N
    sm = SiteMap.rows_cols(M, C)

    def idx(j, l):
        return (j - 1) * C + (l - 1)

    b = _Bonds(M * C)
    for j in range(1, M + 1):
        for l in range(1, C):
            b.hop(idx(j, l), idx(j, l + 1), bond_scale * (1.0 + (-1) ** l * delta))
    if J_inter != 0.0:
        for j in range(1, M + 1):
            jn = j % M + 1
            for l in range(1, C + 1):
                b.hop(idx(j, l), idx(jn, l), J_inter)
    kappa = complex(kappa)
    hp = SparseOperator.from_triplets(M * C, [(idx(1, 1), idx(M, 1), kappa)] if kappa != 0 else [])
    return ModelPair(
        b.op(), hp, sm, "ssh_cylinder",
        {"M_rows": M, "N_cells": N, "delta": delta, "J_inter": float(J_inter),
         "kappa": kappa, "bond_scale": float(bond_scale)},
        periodic=False, warnings=warns,
    )


def _row_signs(M: int, row_phase: str) -> np.ndarray:
    half = M // 2
    if row_phase == "uniform":
        return np.ones(half)
    if row_phase == "staggered":
        return (-1.0) ** np.arange(half)
    raise InvalidSpecError(f"row_phase must be 'uniform' or 'staggered', got {row_phase!r}")


def cylinder_edge_modes(
    M_rows: int, N_cells: int, delta: float, row_phase: str = "staggered"
) -> tuple[StateVector, StateVector]:
    """Left-boundary modes ``(L_e, L_o)`` on even and odd rows.

    Both live on odd columns with amplitude ``rho^(l-1)`` along a row.
    ``row_phase="staggered"`` alternates the sign between successive rows of
    the same parity, which makes them exact zero modes of the periodic row
    coupling up to the far-boundary residual (needs ``M_rows % 4 == 0``).
    ``"uniform"`` drops the alternation; those states are annihilated by the
    dimerized bonds only and pick up ``2 J`` from the row coupling.
    """
    M = _int_param(M_rows, "M_rows", 2)
    _require(M % 2 == 0, f"M_rows must be even, got {M}")
    if row_phase == "staggered":
        _require(M % 4 == 0, f"staggered edge modes need M_rows divisible by 4, got {M}")
    N = _int_param(N_cells, "N_cells", 1)
    delta, _ = _delta_param(delta)
    rho = edge_ratio(delta)
    omega = (M / 2) * (1.0 - rho ** (2 * N)) / (1.0 - rho ** 2)
    C = 2 * N
    signs = _row_signs(M, row_phase)
    profile = rho ** np.arange(N) / math.sqrt(omega)
    Le = np.zeros((M, C), dtype=np.complex128)
    Lo = np.zeros((M, C), dtype=np.complex128)
    for j in range(1, M // 2 + 1):
        Le[2 * j - 1, 0::2] = signs[j - 1] * profile
        Lo[2 * j - 2, 0::2] = signs[j - 1] * profile
    sm = SiteMap.rows_cols(M, C)
    return StateVector(Le.ravel(), sm), StateVector(Lo.ravel(), sm)


def cylinder_boundary_residual(M_rows: int, N_cells: int, delta: float, bond_scale: float = 1.0) -> float:
    """``||H0 |L_o>||`` for the staggered modes: only the far column contributes."""
    rho = edge_ratio(delta)
    row_norm2 = (1.0 - rho ** (2 * N_cells)) / (1.0 - rho ** 2)
    return bond_scale * (1.0 - delta) * abs(rho) ** (N_cells - 1) / math.sqrt(row_norm2)


# -- two sites ---------------------------------------------------------------


def build_two_site(kappa: complex, eps0: float) -> ModelPair:
    """``H0 = eps0 * 1`` and ``Hp = kappa |1><2|``."""
    b = _Bonds(2)
    b.onsite(0, float(eps0))
    b.onsite(1, float(eps0))
    kappa = complex(kappa)
    hp = SparseOperator.from_triplets(2, [(0, 1, kappa)] if kappa != 0 else [])
    return ModelPair(
        b.op(), hp, SiteMap.chain(2), "two_site", {"kappa": kappa, "eps0": float(eps0)}
    )


# ---------------------------------------------------------------------------
# Declarative specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """One model family plus its parameters, as read from a config file."""

    family: str
    params: dict

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpecError(f"unknown family {self.family!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        family = d.pop("family")
        return cls(family, d)

    def to_dict(self) -> dict:
        return {"family": self.family, **self.params}

    def with_params(self, **kw: Any) -> "ModelSpec":
        p = dict(self.params)
        p.update(kw)
        return ModelSpec(self.family, p)

    def build(self) -> ModelPair:
        return build_model(self)


def _kappa(p: dict, default=0.0) -> complex:
    v = p.get("kappa", default)
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def build_model(spec: ModelSpec) -> ModelPair:
    p = spec.params
    f = spec.family
    if f == "ring":
        return build_ring(p["N_half"])
    if f == "ring_with_hop":
        return build_ring_with_hop(p["N_half"], p["l0"], p["r"], _kappa(p))
    if f == "kspace_ring":
        return build_kspace_ring(p["N_sites"], _kappa(p))
    if f == "ladder":
        return build_ladder(p["N_rungs"], p["J"], p["n_max"])
    if f == "ssh_chain":
        return build_ssh_chain(p["N_cells"], p["delta"], _kappa(p))
    if f == "ssh_cylinder":
        return build_ssh_cylinder(
            p["M_rows"], p["N_cells"], p["delta"], p["J_inter"], _kappa(p), p.get("bond_scale", 1.0)
        )
    if f == "two_site":
        return build_two_site(_kappa(p), p.get("eps0", 0.0))
    raise InvalidSpecError(f"unknown family {f!r}")  # pragma: no cover


def coupling_key(spec: ModelSpec) -> str:
    """Name of the parameter that scales ``Hp`` for the given family."""
    return "J" if spec.family == "ladder" else "kappa"
