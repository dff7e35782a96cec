"""Non-unitary time evolution ``psi(t) = exp(-i H t) psi(0)`` and fidelity curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .models import InvalidSpecError, ModelPair, SiteMap, StateVector, _int_param, _row_signs
from .numkit import SparseOperator, expm

FIXED_STEP_RK4 = "FIXED_STEP_RK4"
DENSE_EXPM = "DENSE_EXPM"
METHODS = (FIXED_STEP_RK4, DENSE_EXPM)

MAX_STEP_NORM = 0.5
DEFAULT_STEP_FACTOR = 0.1
MAX_EXPM_DIM = 512


class ConfigurationError(ValueError):
    """Propagation settings rejected before integration starts."""


class IntegrationError(RuntimeError):
    def __init__(self, message: str, last_good_time: float):
        self.last_good_time = last_good_time
        super().__init__(f"{message} (last good time {last_good_time})")


@dataclass(frozen=True)
class PropagationConfig:
    """``dt=None`` picks ``0.1 / ||H||_1``."""

    dt: float | None = None
    method: str = FIXED_STEP_RK4
    renormalize_internally: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")


@dataclass(frozen=True)
class Snapshot:
    time: float
    state: np.ndarray  # raw, unnormalized amplitudes
    norm: float
    probabilities: np.ndarray
    fidelity: float | None = None


@dataclass(frozen=True)
class EvolutionTrace:
    snapshots: tuple[Snapshot, ...]
    site_map: SiteMap
    dt: float | None
    steps: int
    method: str
    metadata: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    def at(self, t: float) -> Snapshot:
        for s in self.snapshots:
            if abs(s.time - t) <= 1e-9 * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t={t}")

    def state(self, t: float) -> StateVector:
        return StateVector(self.at(t).state, self.site_map)


def _rk4_step(csr, psi: np.ndarray, h: float) -> np.ndarray:
    # dpsi/dt = -i H psi; overflow is caught by the caller's finiteness check
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = -1j * (csr @ psi)
        k2 = -1j * (csr @ (psi + 0.5 * h * k1))
        k3 = -1j * (csr @ (psi + 0.5 * h * k2))
        k4 = -1j * (csr @ (psi + h * k3))
        return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _snapshot(t: float, psi: np.ndarray, target: np.ndarray | None) -> Snapshot:
    norm = float(np.linalg.norm(psi))
    if norm == 0.0 or not np.isfinite(norm):
        raise IntegrationError("state norm is zero or non-finite", t)
    p = np.abs(psi) ** 2
    p = p / p.sum()
    fid = None
    if target is not None:
        fid = float(abs(np.vdot(target, psi)) / norm)
    return Snapshot(float(t), psi.copy(), norm, p, fid)


def evolve(
    model: ModelPair | SparseOperator,
    psi0,
    times: Sequence[float],
    cfg: PropagationConfig | None = None,
    target=None,
    site_map: SiteMap | None = None,
) -> EvolutionTrace:
    """Integrate ``dpsi/dt = -i (H0 + Hp) psi`` and record snapshots at ``times``.

    Parameters
    ----------
    model : ModelPair or SparseOperator
    psi0 : StateVector or array
        Must have unit norm.
    times : sequence of float
        Non-negative and sorted; each gap is split into equal steps no longer
        than ``cfg.dt`` so snapshots land exactly on the requested times.
    cfg : PropagationConfig, optional
    target : StateVector or array, optional
        Unit-norm state for the per-snapshot fidelity.

    Raises
    ------
    ConfigurationError
        Bad times, non-unit ``psi0`` or ``dt * ||H|| > 0.5`` for RK4.
    IntegrationError
        Non-finite amplitudes appeared.
    """
    cfg = cfg or PropagationConfig()
    if isinstance(model, ModelPair):
        H = model.H
        site_map = model.site_map
    else:
        H = model
        if site_map is None:
            site_map = SiteMap.chain(H.dim)
    psi = np.array(getattr(psi0, "amplitudes", psi0), dtype=np.complex128)
    if psi.shape != (H.dim,):
        raise ConfigurationError(f"initial state has shape {psi.shape}, expected ({H.dim},)")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ConfigurationError("initial state must have unit norm")
    times = [float(t) for t in times]
    if not times or times[0] < 0 or any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigurationError("times must be non-negative and strictly increasing")
    tgt = None
    if target is not None:
        tgt = np.asarray(getattr(target, "amplitudes", target), dtype=np.complex128)
        if abs(np.linalg.norm(tgt) - 1.0) > 1e-10:
            raise ConfigurationError("target state must have unit norm")

    bound = H.spectral_bound()
    dt = cfg.dt
    if cfg.method == FIXED_STEP_RK4:
        if dt is None:
            n1 = H.norm_1()
            dt = DEFAULT_STEP_FACTOR / n1 if n1 > 0 else max(times[-1], 1.0)
        if dt * bound > MAX_STEP_NORM:
            raise ConfigurationError(
                f"dt={dt} violates dt*||H|| <= {MAX_STEP_NORM} (||H|| bound {bound:.6g})"
            )
    elif H.dim > MAX_EXPM_DIM:
        raise ConfigurationError(f"DENSE_EXPM limited to dim <= {MAX_EXPM_DIM}, got {H.dim}")

    snaps = []
    t_now = 0.0
    steps = 0
    csr = H.to_csr()
    dense = H.to_dense() if cfg.method == DENSE_EXPM else None
    propagators: dict[float, np.ndarray] = {}
    scale = 1.0  # accumulated normalization when renormalizing internally
    for t in times:
        gap = t - t_now
        if gap > 0:
            if cfg.method == FIXED_STEP_RK4:
                n = max(1, math.ceil(gap / dt - 1e-12))
                h = gap / n
                for s in range(n):
                    psi = _rk4_step(csr, psi, h)
                    steps += 1
                    if cfg.renormalize_internally:
                        nrm = np.linalg.norm(psi)
                        psi /= nrm
                        scale *= nrm
                if not np.all(np.isfinite(psi)):
                    last = snaps[-1].time if snaps else 0.0
                    raise IntegrationError("non-finite amplitude", last)
            else:
                U = propagators.get(gap)
                if U is None:
                    U = expm(-1j * gap * dense)
                    propagators[gap] = U
                psi = U @ psi
                steps += 1
        t_now = t
        raw = psi * scale if cfg.renormalize_internally else psi
        snaps.append(_snapshot(t, raw, tgt))
    return EvolutionTrace(
        tuple(snaps), site_map, dt if cfg.method == FIXED_STEP_RK4 else None, steps, cfg.method,
        {"norm_bound": bound},
    )


def two_site_exact(kappa: complex, eps0: float, t: float, psi0) -> np.ndarray:
    """Closed-form ``exp(-i H t) psi0`` for ``H = eps0 + kappa |1><2|``.

    Linear in ``t`` because ``(|1><2|)^2 = 0``.
    """
    p = np.asarray(getattr(psi0, "amplitudes", psi0), dtype=np.complex128)
    out = np.array([p[0] - 1j * kappa * t * p[1], p[1]], dtype=np.complex128)
    return np.exp(-1j * eps0 * t) * out


def stripe_initial_state(
    M_rows: int, N_cells: int, rows: str = "odd", row_phase: str = "uniform"
) -> StateVector:
    """Equal-weight excitation of column 1 on every other row.

    ``rows="odd"`` fills rows 1, 3, ..., M-1; ``rows="even"`` fills rows
    2, 4, ..., M.  ``row_phase="staggered"`` alternates signs along the filled
    rows, matching the staggered edge modes.
    """
    M = _int_param(M_rows, "M_rows", 2)
    if M % 2:
        raise InvalidSpecError(f"M_rows must be even, got {M}")
    N = _int_param(N_cells, "N_cells", 1)
    if rows not in ("odd", "even"):
        raise InvalidSpecError(f"rows must be 'odd' or 'even', got {rows!r}")
    C = 2 * N
    a = np.zeros((M, C), dtype=np.complex128)
    signs = _row_signs(M, row_phase)
    first = 0 if rows == "odd" else 1
    a[first::2, 0] = signs / math.sqrt(M / 2)
    return StateVector(a.ravel(), SiteMap.rows_cols(M, C))


def fidelity_series(trace: EvolutionTrace, target) -> list[tuple[float, float]]:
    """``(t, |<target|psi(t)>| / ||psi(t)||)`` for every snapshot."""
    tgt = np.asarray(getattr(target, "amplitudes", target), dtype=np.complex128)
    if abs(np.linalg.norm(tgt) - 1.0) > 1e-10:
        raise ValueError("target must have unit norm")
    out = []
    for s in trace.snapshots:
        if s.norm == 0.0:
            raise ValueError(f"zero-norm snapshot at t={s.time}")
        out.append((s.time, float(abs(np.vdot(tgt, s.state)) / s.norm)))
    return out


def column_weight_beyond(trace_or_snapshot, site_map: SiteMap, col: int) -> float:
    """Normalized probability on sites whose grid column exceeds ``col``."""
    snap = trace_or_snapshot
    cols = np.array([g[1] for g in site_map.grid])
    return float(snap.probabilities[cols > col].sum())
