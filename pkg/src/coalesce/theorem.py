"""Check the degeneracy-to-coalescence construction on concrete matrices.

Given a Hermitian ``H0`` with a degenerate pair ``|A>``, ``|B>`` and a
non-Hermitian ``Hp`` with ``Hp|A> = 0`` and ``Hp^H|B> = 0``, the sum
``H0 + Hp`` has ``|A>`` as a coalescing state.  ``check_transition`` measures
each hypothesis and, separately, whether the conclusion is visible in the
spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .numkit import SparseOperator, apply
from .spectra import EP, TOL_CLUSTER, TOL_RANK, classify

HOLDS = "HOLDS"
HOLDS_ASYMPTOTICALLY = "HOLDS_ASYMPTOTICALLY"
FAILS = "FAILS"

NODAL_TOL = 1e-10

# conclusion is only tested on dense spectra up to this size
MAX_CONCLUSION_DIM = 1024


@dataclass(frozen=True)
class TheoremReport:
    residual_H0A: float
    residual_H0B: float
    residual_HpA: float
    residual_HpdB: float
    overlap_AB: complex
    energy: complex
    tol: float
    verdict: str
    hypotheses_hold: bool
    conclusion: str  # "EP", "NOT_EP" or "SKIPPED"
    conclusion_distance: float | None = None
    declared_scale: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["overlap_AB"] = [self.overlap_AB.real, self.overlap_AB.imag]
        d["energy"] = [self.energy.real, self.energy.imag]
        return d


def _vec(x) -> np.ndarray:
    return np.asarray(getattr(x, "amplitudes", x), dtype=np.complex128).ravel()


def _as_op(H) -> SparseOperator:
    return H if isinstance(H, SparseOperator) else SparseOperator.from_dense(H)


def rayleigh_energy(H0, A) -> complex:
    """``<A|H0|A> / <A|A>``; default degenerate energy when none is given."""
    a = _vec(A)
    return complex(np.vdot(a, apply(_as_op(H0), a)) / np.vdot(a, a))


def check_transition(
    H0,
    Hp,
    A,
    B,
    E: complex | None = None,
    tol: float = 1e-10,
    scale: float | None = None,
    tol_cluster: float = TOL_CLUSTER,
    tol_rank: float = TOL_RANK,
) -> TheoremReport:
    """Measure the hypotheses for ``(H0, Hp, A, B)`` and test the EP conclusion.

    Verdicts
    --------
    HOLDS
        All residuals and ``|<B|A>|`` are below ``tol``, and ``H0 + Hp`` has
        an EP cluster at ``E`` whose eigenspace contains ``A`` to ``10 tol``.
    HOLDS_ASYMPTOTICALLY
        Residuals are not below ``tol`` but are bounded by the declared
        finite-size ``scale`` (and ``|<B|A>| <= tol``).  The spectral test is
        skipped since the finite lattice is only near an EP.
    FAILS
        Anything else, including exact hypotheses without a visible EP.
    """
    H0 = _as_op(H0)
    Hp = _as_op(Hp)
    a, b = _vec(A), _vec(B)
    if not (a.shape[0] == b.shape[0] == H0.dim == Hp.dim):
        raise ValueError(
            f"dimension mismatch: H0 {H0.dim}, Hp {Hp.dim}, A {a.shape[0]}, B {b.shape[0]}"
        )
    if E is None:
        E = rayleigh_energy(H0, a)
    E = complex(E)
    r0a = float(np.linalg.norm(apply(H0, a) - E * a))
    r0b = float(np.linalg.norm(apply(H0, b) - E * b))
    rpa = float(np.linalg.norm(apply(Hp, a)))
    rpb = float(np.linalg.norm(apply(Hp.adjoint(), b)))
    ov = complex(np.vdot(b, a))
    residuals = (r0a, r0b, rpa, rpb)
    exact = max(residuals) <= tol and abs(ov) <= tol

    conclusion, dist = "SKIPPED", None
    if exact:
        verdict = FAILS
        if H0.dim <= MAX_CONCLUSION_DIM:
            report = classify(H0 + Hp, tol_cluster, tol_rank)
            c = report.nearest(E)
            # distance of A from the cluster's right eigenspace
            Q = c.eigenspace
            dist = float(np.linalg.norm(a - Q @ (Q.conj().T @ a)))
            near = abs(c.representative - E) <= tol_cluster * max(1.0, report.eigensystem.norm)
            is_ep = near and c.classification == EP and dist <= 10 * tol
            conclusion = "EP" if is_ep else "NOT_EP"
            verdict = HOLDS if is_ep else FAILS
    elif scale is not None and max(residuals) <= scale * (1 + 1e-9) + tol and abs(ov) <= tol:
        verdict = HOLDS_ASYMPTOTICALLY
    else:
        verdict = FAILS
    return TheoremReport(r0a, r0b, rpa, rpb, ov, E, tol, verdict, exact, conclusion, dist, scale)


def nodal_points(state, tol: float = NODAL_TOL) -> list:
    """Site labels where ``|amplitude| <= tol * max |amplitude|``."""
    a = _vec(state)
    peak = np.abs(a).max()
    idx = np.nonzero(np.abs(a) <= tol * peak)[0]
    sm = getattr(state, "site_map", None)
    if sm is None:
        return [int(i) + 1 for i in idx]
    return [sm.label(int(i)) for i in idx]


def suggest_hops(A, B, tol: float = NODAL_TOL) -> list[tuple]:
    """All ``(i, j)`` with ``j`` a node of ``A`` and ``i`` a node of ``B``.

    Each pair gives a valid ``Hp = kappa |i><j|`` for the construction.
    """
    nodes_a = nodal_points(A, tol)
    nodes_b = nodal_points(B, tol)
    return [(i, j) for i in nodes_b for j in nodes_a if i != j]


def hop_operator(site_map, i, j, kappa: complex) -> SparseOperator:
    """``kappa |i><j|`` on the lattice of ``site_map``."""
    return SparseOperator.from_triplets(
        site_map.dim, [(site_map.index(i), site_map.index(j), complex(kappa))]
    )


__all__ = [
    "TheoremReport", "HOLDS", "HOLDS_ASYMPTOTICALLY", "FAILS", "check_transition",
    "nodal_points", "suggest_hops", "rayleigh_energy", "hop_operator",
]
