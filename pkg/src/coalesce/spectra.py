"""Eigenvalue clustering and DP / EP classification."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .models import INFINITE, ModelPair, ModelSpec, coupling_key, ladder_bloch
from .numkit import EigenSystem, as_complex_matrix, eig_full, numerical_rank

TOL_CLUSTER = 1e-6
TOL_RANK = 1e-6

SIMPLE = "SIMPLE"
DP = "DP"
EP = "EP"


@dataclass(frozen=True)
class Cluster:
    """A group of numerically coincident eigenvalues.

    ``eigenspace`` is an orthonormal basis (columns) of the right null space
    of ``H - representative``, of dimension ``geometric``; for an EP with
    ``geometric == 1`` it holds the coalescing state.
    """

    representative: complex
    members: tuple[int, ...]
    geometric: int
    min_phase_rigidity: float
    min_biorthogonal_norm: float
    eigenspace: np.ndarray = field(repr=False)

    @property
    def algebraic(self) -> int:
        return len(self.members)

    @property
    def classification(self) -> str:
        if self.algebraic == 1:
            return SIMPLE
        return EP if self.geometric < self.algebraic else DP

    @property
    def coalescing_vector(self) -> np.ndarray | None:
        if self.classification == EP and self.geometric == 1:
            return self.eigenspace[:, 0]
        return None

    def to_dict(self) -> dict:
        return {
            "re_lambda": float(self.representative.real),
            "im_lambda": float(self.representative.imag),
            "members": list(self.members),
            "alg_mult": self.algebraic,
            "geo_mult": self.geometric,
            "phase_rigidity": self.min_phase_rigidity,
            "biorthogonal_norm": self.min_biorthogonal_norm,
            "class": self.classification,
        }


@dataclass(frozen=True)
class SpectralReport:
    eigensystem: EigenSystem
    clusters: tuple[Cluster, ...]
    model: dict | None = None
    tol_cluster: float = TOL_CLUSTER
    tol_rank: float = TOL_RANK

    def by_class(self, cls: str) -> list[Cluster]:
        return [c for c in self.clusters if c.classification == cls]

    def nearest(self, energy: complex) -> Cluster:
        return min(
            self.clusters,
            key=lambda c: (abs(c.representative - energy), c.representative.imag),
        )

    def to_dict(self) -> dict:
        es = self.eigensystem
        return {
            "model": self.model,
            "tol_cluster": self.tol_cluster,
            "tol_rank": self.tol_rank,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in es.eigenvalues],
            "max_residual": es.max_residual(),
            "clusters": [dict(cluster_id=i, **c.to_dict()) for i, c in enumerate(self.clusters)],
        }


def biorthogonal_norm(u_left, v_right) -> complex:
    """``<u|v>`` for a left/right pair; its modulus is the phase rigidity."""
    u = np.asarray(getattr(u_left, "amplitudes", u_left), dtype=np.complex128).ravel()
    v = np.asarray(getattr(v_right, "amplitudes", v_right), dtype=np.complex128).ravel()
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return complex(np.vdot(u, v))


def cluster_spectrum(es: EigenSystem, tol_cluster: float = TOL_CLUSTER) -> list[list[int]]:
    """Single-linkage groups of eigenvalue indices.

    Two eigenvalues are linked when closer than ``tol_cluster * max(1, ||H||_F)``.
    Groups come back ordered by their smallest member index.
    """
    if tol_cluster <= 0:
        raise ValueError("tol_cluster must be positive")
    lam = es.eigenvalues
    n = lam.shape[0]
    link = tol_cluster * max(1.0, es.norm)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    close = np.abs(lam[:, None] - lam[None, :]) <= link
    for i, j in zip(*np.nonzero(np.triu(close, 1))):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _null_bases(A: np.ndarray, lam: complex, g: int) -> tuple[np.ndarray, np.ndarray]:
    # g smallest right / left singular vectors of A - lam
    U, _, Vh = np.linalg.svd(A - lam * np.eye(A.shape[0]))
    return Vh[-g:].conj().T, U[:, -g:]


def _canonical_phase(V: np.ndarray) -> np.ndarray:
    # fix the arbitrary phase of single vectors so reports are reproducible
    if V.shape[1] != 1:
        return V
    v = V[:, 0]
    i = int(np.argmax(np.abs(v)))
    return (v * (abs(v[i]) / v[i]))[:, None]


def classify(H, tol_cluster: float = TOL_CLUSTER, tol_rank: float = TOL_RANK, model: dict | None = None) -> SpectralReport:
    """Eigen-decompose ``H`` and label each eigenvalue cluster SIMPLE, DP or EP.

    Geometric multiplicity is the numerical rank of the cluster's right
    eigenvectors.  Phase rigidity of a multi-member cluster is the smallest
    singular value of ``Q_left^H Q_right`` between orthonormal bases of the
    left and right eigenspaces (0 at an EP, 1 for a normal matrix).
    """
    if tol_cluster <= 0 or tol_rank <= 0:
        raise ValueError("tolerances must be positive")
    if isinstance(H, ModelPair):
        model = model or {"family": H.family, **_jsonable(H.params)}
        H = H.H
    A = as_complex_matrix(H)
    es = eig_full(A)
    clusters = []
    for members in cluster_spectrum(es, tol_cluster):
        lam = complex(np.mean(es.eigenvalues[members]))
        raw = min(abs(biorthogonal_norm(es.left[:, i], es.right[:, i])) for i in members)
        if len(members) == 1:
            i = members[0]
            cl = Cluster(complex(es.eigenvalues[i]), (i,), 1, raw, raw, _canonical_phase(es.right[:, [i]]))
        else:
            g = numerical_rank([es.right[:, i] for i in members], tol_rank)
            right, left = _null_bases(A, lam, g)
            rigidity = float(np.linalg.svd(left.conj().T @ right, compute_uv=False).min())
            cl = Cluster(lam, tuple(members), g, rigidity, raw, _canonical_phase(right))
        clusters.append(cl)
    return SpectralReport(es, tuple(clusters), model, tol_cluster, tol_rank)


def _jsonable(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, complex):
            out[k] = v.real if v.imag == 0 else [v.real, v.imag]
        else:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    kappa: float
    cluster_id: int
    representative: complex
    alg_mult: int
    geo_mult: int
    phase_rigidity: float
    classification: str
    error: str | None = None

    def as_record(self) -> dict:
        return {
            "kappa": self.kappa,
            "cluster_id": self.cluster_id,
            "re_lambda": self.representative.real,
            "im_lambda": self.representative.imag,
            "alg_mult": self.alg_mult,
            "geo_mult": self.geo_mult,
            "phase_rigidity": self.phase_rigidity,
            "class": self.classification,
        }


SCAN_COLUMNS = ("kappa", "cluster_id", "re_lambda", "im_lambda", "alg_mult", "geo_mult", "phase_rigidity", "class")


def ep_scan(
    template: ModelSpec,
    kappa_values: Sequence[float],
    track: Sequence[complex] | None = None,
    tol_cluster: float = TOL_CLUSTER,
    tol_rank: float = TOL_RANK,
    workers: int = 1,
) -> list[ScanRow]:
    """Rebuild ``template`` at each coupling and follow selected clusters.

    Clusters are tracked by nearest representative eigenvalue from one step to
    the next, ties going to the smaller imaginary part.  Without ``track``,
    every multi-member cluster of the first successful row is followed (all
    clusters if none is degenerate).  A failing row is reported with class
    ``FAILED`` and the sweep continues.
    """
    kappa_values = list(kappa_values)
    if not kappa_values:
        raise ValueError("kappa_values must be non-empty")
    key = coupling_key(template)

    def solve(kappa):
        try:
            return classify(template.with_params(**{key: kappa}).build(), tol_cluster, tol_rank)
        except Exception as exc:  # noqa: BLE001 - reported per row
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, kappa_values))
    else:
        results = [solve(k) for k in kappa_values]

    targets = list(track) if track is not None else None
    rows: list[ScanRow] = []
    for kappa, res in zip(kappa_values, results):
        kap = float(np.real(kappa))
        if isinstance(res, Exception):
            for cid in range(len(targets) if targets else 1):
                rows.append(ScanRow(kap, cid, complex("nan"), 0, 0, math.nan, "FAILED", f"{type(res).__name__}: {res}"))
            continue
        if targets is None:
            picked = [c for c in res.clusters if c.algebraic > 1] or list(res.clusters)
            targets = [c.representative for c in picked]
        new_targets = []
        for cid, t in enumerate(targets):
            c = res.nearest(t)
            new_targets.append(c.representative)
            rows.append(ScanRow(kap, cid, c.representative, c.algebraic, c.geometric, c.min_phase_rigidity, c.classification))
        targets = new_targets
    return rows


def ladder_gap_closing(J: float, n_max, k_grid: Sequence[float]) -> tuple[float, float]:
    """Smallest analytic band separation ``|eps+ - eps-|`` over ``k_grid`` and where it occurs.

    The grid must stay at least ``pi/50`` away from ``k = 0`` and ``k = pi``
    where the truncated sine series rings.
    """
    ks = np.asarray(list(k_grid), dtype=float)
    if ks.size == 0:
        raise ValueError("k_grid must be non-empty")
    folded = np.abs(np.angle(np.exp(1j * ks)))
    margin = math.pi / 50 - 1e-12
    if np.any(folded < margin) or np.any(math.pi - folded < margin):
        raise ValueError("k_grid must exclude k=0 and k=pi by at least pi/50")
    gaps = []
    for k in ks:
        _, (ep, em) = ladder_bloch(float(k), J, n_max)
        gaps.append(abs(ep - em))
    i = int(np.argmin(gaps))
    return float(gaps[i]), float(ks[i])


def match_spectra(a: Sequence[complex], b: Sequence[complex]) -> float:
    """Largest distance in the optimal one-to-one pairing of two eigenvalue multisets."""
    from scipy.optimize import linear_sum_assignment

    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ValueError("spectra differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def ladder_bloch_spectrum(N_rungs: int, J: float, n_max) -> np.ndarray:
    """Union of the analytic Bloch eigenvalues over the finite ladder's momenta."""
    out = []
    for k in 2 * np.pi * np.arange(N_rungs) / N_rungs:
        _, (ep, em) = ladder_bloch(float(k), J, n_max)
        out += [ep, em]
    return np.array(out)


__all__ = [
    "Cluster", "SpectralReport", "ScanRow", "SCAN_COLUMNS", "SIMPLE", "DP", "EP", "INFINITE",
    "biorthogonal_norm", "cluster_spectrum", "classify", "ep_scan", "ladder_gap_closing",
    "match_spectra", "ladder_bloch_spectrum", "TOL_CLUSTER", "TOL_RANK",
]
