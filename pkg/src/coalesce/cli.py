"""``coalesce`` command line: validate a JSON config, run one job, write CSV/JSON.

Exit codes: 0 success, 2 config validation error, 1 numerical failure.  Errors
go to stderr as one JSON object.  Every output file of a job is written to a
temporary sibling first and renamed into place only once all of them exist.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .config import ConfigError, ConfigIssue, JobConfig, parse_overrides, validate
from .dynamics import (
    ConfigurationError,
    IntegrationError,
    PropagationConfig,
    evolve,
    stripe_initial_state,
)
from .models import (
    InvalidSpecError,
    ModelPair,
    StateVector,
    admissible_k,
    cylinder_boundary_residual,
    cylinder_edge_modes,
    ladder_delta,
    ring_pair_states,
    ssh_boundary_residual,
    ssh_edge_modes,
)
from .numkit import EigenSolverError
from .spectra import SCAN_COLUMNS, classify, ep_scan
from .theorem import check_transition

TOOL = f"coalesce {__version__}"

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_CONFIG = 2

CLUSTER_COLUMNS = (
    "cluster_id", "re_lambda", "im_lambda", "alg_mult", "geo_mult",
    "phase_rigidity", "biorthogonal_norm", "class",
)
LADDER_COLUMNS = ("k", "delta", "re_eps_plus", "im_eps_plus", "re_eps_minus", "im_eps_minus", "gap")


# ---------------------------------------------------------------------------
# Formatting and atomic output
# ---------------------------------------------------------------------------


def fmt(x) -> str:
    """Shortest round-trip text for a CSV cell (at most 17 significant digits)."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(float(x.real)), _jsonable(float(x.imag))]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def csv_text(columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def json_text(payload: dict, cfg: JobConfig | None) -> str:
    doc = {"tool": TOOL}
    if cfg is not None:
        doc["config"] = cfg.to_dict()
    doc.update(payload)
    return json.dumps(_jsonable(doc), indent=2) + "\n"


class Outputs:
    """Collects ``path -> text`` and commits them all or none."""

    def __init__(self, base: Path | None = None):
        self.base = base
        self.files: dict[Path, str] = {}
        self.stdout: list[str] = []

    def add(self, path, text: str):
        if path is None or str(path) == "-":
            self.stdout.append(text)
            return
        p = Path(path)
        if self.base is not None and not p.is_absolute():
            p = self.base / p
        self.files[p] = text

    def commit(self):
        staged = []
        umask = os.umask(0)
        os.umask(umask)
        try:
            for path, text in self.files.items():
                path.parent.mkdir(parents=True, exist_ok=True)
                fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
                with os.fdopen(fd, "w", newline="") as fh:
                    fh.write(text)
                os.chmod(tmp, 0o666 & ~umask)
                staged.append((tmp, path))
        except BaseException:
            for tmp, _ in staged:
                os.unlink(tmp)
            raise
        for tmp, path in staged:
            os.replace(tmp, path)
        for text in self.stdout:
            sys.stdout.write(text)
        return [str(p) for p in self.files]


# ---------------------------------------------------------------------------
# State selectors
# ---------------------------------------------------------------------------


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _default_ring_k(p: dict) -> float:
    ks = admissible_k(p["r"], p["N_half"])
    if not ks:
        raise InvalidSpecError(f"no k on the N_half={p['N_half']} grid has cos(k r)=0 for r={p['r']}")
    return ks[0]


def resolve_state(sel: dict, model: ModelPair, spec_params: dict) -> StateVector:
    """Turn a ``{"kind": ...}`` selector into a unit-norm state on ``model``."""
    kind = sel["kind"]
    sm = model.site_map
    p = spec_params
    if kind == "site":
        return model.basis_state(sel["site"])
    if kind == "vector":
        amps = np.array([_complex(v) for v in sel["amplitudes"]], dtype=np.complex128)
        if amps.shape[0] != sm.dim:
            raise InvalidSpecError(f"vector has {amps.shape[0]} amplitudes, lattice has {sm.dim} sites")
        st = StateVector(amps, sm)
        return st.normalized() if sel.get("normalize", True) else st
    if kind == "ring_pair":
        k = sel.get("k")
        k = _default_ring_k(p) if k is None else k
        l0 = sel.get("l0") or p["l0"]
        plus, minus = ring_pair_states(p["N_half"], k, l0)
        return plus if sel.get("sign", "+") == "+" else minus
    if kind in ("ssh_L", "ssh_R"):
        L, R = ssh_edge_modes(p["N_cells"], p["delta"])
        return L if kind == "ssh_L" else R
    if kind in ("cylinder_L_e", "cylinder_L_o"):
        Le, Lo = cylinder_edge_modes(p["M_rows"], p["N_cells"], p["delta"], sel.get("row_phase", "staggered"))
        return Le if kind == "cylinder_L_e" else Lo
    if kind == "stripe":
        return stripe_initial_state(p["M_rows"], p["N_cells"], sel.get("rows", "odd"), sel.get("row_phase", "uniform"))
    raise InvalidSpecError(f"unknown selector {kind!r}")  # pragma: no cover


def theorem_defaults(family: str) -> tuple[dict, dict]:
    return {
        "ssh_chain": ({"kind": "ssh_L"}, {"kind": "ssh_R"}),
        "ssh_cylinder": ({"kind": "cylinder_L_o", "row_phase": "staggered"},
                         {"kind": "cylinder_L_e", "row_phase": "staggered"}),
        "ring_with_hop": ({"kind": "ring_pair", "sign": "+"}, {"kind": "ring_pair", "sign": "-"}),
        "two_site": ({"kind": "site", "site": 1}, {"kind": "site", "site": 2}),
    }[family]


def auto_scale(family: str, p: dict) -> float | None:
    if family == "ssh_chain":
        return ssh_boundary_residual(p["N_cells"], p["delta"])
    if family == "ssh_cylinder":
        return cylinder_boundary_residual(p["M_rows"], p["N_cells"], p["delta"], p.get("bond_scale", 1.0))
    return None


# ---------------------------------------------------------------------------
# Jobs
# ---------------------------------------------------------------------------


def run_spectrum(cfg: JobConfig, out: Outputs, primary=None):
    job = cfg.job
    report = classify(cfg.model_pair(), job["tol_cluster"], job["tol_rank"], model=cfg.model.to_dict())
    rows = []
    for i, c in enumerate(report.clusters):
        d = c.to_dict()
        rows.append([i, d["re_lambda"], d["im_lambda"], d["alg_mult"], d["geo_mult"],
                     d["phase_rigidity"], d["biorthogonal_norm"], d["class"]])
    out.add(primary or job["csv"], csv_text(CLUSTER_COLUMNS, rows))
    if job["json"]:
        out.add(job["json"], json_text({"report": report.to_dict()}, cfg))


def run_ep_scan(cfg: JobConfig, out: Outputs, primary=None):
    job = cfg.job
    track = None if job["track"] is None else [_complex(t) for t in job["track"]]
    rows = ep_scan(cfg.model, job["kappa_values"], track, job["tol_cluster"], job["tol_rank"], job["workers"])
    recs = [r.as_record() for r in rows]
    out.add(primary or job["csv"], csv_text(SCAN_COLUMNS, [[rec[c] for c in SCAN_COLUMNS] for rec in recs]))


def run_theorem(cfg: JobConfig, out: Outputs, primary=None):
    job = cfg.job
    model = cfg.model_pair()
    p = model.params
    dA, dB = theorem_defaults(model.family) if (job["A"] is None or job["B"] is None) else (None, None)
    A = resolve_state(job["A"] or dA, model, p)
    B = resolve_state(job["B"] or dB, model, p)
    scale = job["scale"]
    if scale == "auto":
        scale = auto_scale(model.family, p)
    E = None if job["E"] is None else _complex(job["E"])
    rep = check_transition(model.H0, model.Hp, A, B, E, job["tol"], scale, job["tol_cluster"], job["tol_rank"])
    payload = {"report": rep.to_dict()}
    if dA is not None:
        payload["default_states"] = {"A": dA, "B": dB}
    out.add(primary or job["json"], json_text(payload, cfg))
    return rep


def run_evolve(cfg: JobConfig, out: Outputs, primary=None):
    job = cfg.job
    model = cfg.model_pair()
    p = model.params
    psi0 = resolve_state(job["initial_state"], model, p)
    target = None if job["target"] is None else resolve_state(job["target"], model, p)
    snap_times = job["snapshot_times"]
    times = sorted(set(job["times"]) | set(snap_times or []))
    pc = PropagationConfig(job["dt"], job["method"], job["renormalize_internally"])
    trace = evolve(model, psi0, times, pc, target=target)
    sm = model.site_map

    fid_set = set(job["times"])
    fid_rows = [[s.time, s.fidelity, s.norm] for s in trace.snapshots if s.time in fid_set]
    if job["fidelity_csv"] is not None or primary is not None:
        out.add(primary or job["fidelity_csv"], csv_text(("t", "fidelity", "norm"), fid_rows))
    if job["snapshots_csv"] is not None:
        wanted = set(snap_times) if snap_times is not None else fid_set
        rows = []
        for s in trace.snapshots:
            if s.time not in wanted:
                continue
            for (r, c), prob in zip(sm.grid, s.probabilities):
                rows.append([s.time, r, c, float(prob)])
        out.add(job["snapshots_csv"], csv_text(("t", "row", "col", "probability"), rows))
    if job["summary_json"] is not None:
        summary = {
            "integrator": {"method": trace.method, "dt": trace.dt, "steps": trace.steps, **trace.metadata},
            "final_norm": trace.snapshots[-1].norm,
            "initial_overlaps": _initial_overlaps(model, psi0),
        }
        if target is not None:
            summary["final_fidelity"] = trace.snapshots[-1].fidelity
        out.add(job["summary_json"], json_text({"summary": summary}, cfg))
    return trace


def _initial_overlaps(model: ModelPair, psi0: StateVector) -> dict:
    p = model.params
    out = {}
    if model.family == "ssh_cylinder":
        for phase in ("staggered", "uniform"):
            try:
                Le, Lo = cylinder_edge_modes(p["M_rows"], p["N_cells"], p["delta"], phase)
            except InvalidSpecError:
                continue
            out[f"L_e_{phase}"] = abs(Le.overlap(psi0))
            out[f"L_o_{phase}"] = abs(Lo.overlap(psi0))
    elif model.family == "ssh_chain":
        L, R = ssh_edge_modes(p["N_cells"], p["delta"])
        out = {"L": abs(L.overlap(psi0)), "R": abs(R.overlap(psi0))}
    return out


def ladder_table(J: float, n_max, k_points: int, k_margin: float) -> list[list]:
    pos = np.linspace(k_margin, math.pi - k_margin, k_points)
    ks = np.concatenate([-pos[::-1], pos])
    deltas = np.atleast_1d(ladder_delta(ks, J, n_max))
    rows = []
    for k, d in zip(ks, deltas):
        c = 2.0 * math.cos(k)
        root = np.sqrt(complex(1.0 - d * d))
        ep, em = c + root, c - root
        rows.append([float(k), float(d), ep.real, ep.imag, em.real, em.imag, abs(ep - em)])
    return rows


def run_ladder(cfg: JobConfig, out: Outputs, primary=None):
    job = cfg.job
    rows = ladder_table(float(job["J"]), job["n_max"], job["k_points"], job["k_margin"])
    i = int(np.argmin([r[-1] for r in rows]))
    out.add(primary or job["csv"], csv_text(LADDER_COLUMNS, rows))
    if job["json"]:
        out.add(job["json"], json_text({"min_gap": rows[i][-1], "k_at_min_gap": rows[i][0]}, cfg))
    return rows[i][-1], rows[i][0]


RUNNERS = {
    "spectrum": run_spectrum,
    "ep-scan": run_ep_scan,
    "theorem-check": run_theorem,
    "evolve": run_evolve,
    "ladder-analytic": run_ladder,
}


# ---------------------------------------------------------------------------
# Canonical configs
# ---------------------------------------------------------------------------


def canonical_configs() -> dict[str, dict]:
    kappas = [round(0.1 * i, 10) for i in range(0, 21)]
    fig4_times = [5.0 * i for i in range(0, 161)]
    return {
        "ring_scan.json": {
            "model": {"family": "ring_with_hop", "N_half": 6, "l0": 1, "r": 1, "kappa": 0.5},
            "job": {"kind": "ep-scan", "kappa_values": kappas, "csv": "ring_scan.csv"},
        },
        "ladder_gap.json": {
            "model": {"family": "ladder", "N_rungs": 64, "J": 1.2732395447351628, "n_max": "INFINITE"},
            "job": {"kind": "ladder-analytic", "k_points": 200, "csv": "ladder_gap.csv", "json": "ladder_gap_summary.json"},
        },
        "ssh_theorem.json": {
            "model": {"family": "ssh_chain", "N_cells": 20, "delta": 0.1, "kappa": 0.5},
            "job": {"kind": "theorem-check", "json": "ssh_theorem_report.json"},
        },
        "fig4.json": {
            "model": {"family": "ssh_cylinder", "M_rows": 20, "N_cells": 100, "delta": 0.1,
                      "J_inter": 1.0, "kappa": 0.5, "bond_scale": 1.0},
            "job": {
                "kind": "evolve",
                "times": fig4_times,
                "snapshot_times": [0.0, 50.0, 200.0, 800.0],
                "initial_state": {"kind": "stripe", "rows": "even", "row_phase": "staggered"},
                "target": {"kind": "cylinder_L_o", "row_phase": "staggered"},
                "snapshots_csv": "fig4_snapshots.csv",
                "fidelity_csv": "fig4_fidelity.csv",
                "summary_json": "fig4_summary.json",
            },
        },
    }


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _error(kind: str, message: str, **extra) -> None:
    doc = {"tool": TOOL, "error": kind, "message": message, **extra}
    sys.stderr.write(json.dumps(_jsonable(doc)) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coalesce", description="DP/EP analysis of non-Hermitian lattices.")
    ap.add_argument("--version", action="version", version=TOOL)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name, help=f"run a {name} job")
        p.add_argument("--config", required=True, help="JSON config file ('-' for stdin)")
        p.add_argument("--out", help="primary output file (default: path from config, else stdout)")
        p.add_argument("--out-dir", help="directory for relative output paths")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key, e.g. model.kappa=0.3")
    p = sub.add_parser("validate", help="check a config and print it with defaults applied")
    p.add_argument("--config", required=True)
    p.add_argument("--kind", choices=list(RUNNERS), help="job kind if the config omits it")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p = sub.add_parser("make-figures", help="write the canonical configs into a directory")
    p.add_argument("--out-dir", default=".", help="target directory")
    return ap


def _read_config(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def run(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    if args.command == "make-figures":
        out = Outputs(Path(args.out_dir))
        for name, doc in canonical_configs().items():
            out.add(name, json.dumps(doc, indent=2) + "\n")
        try:
            written = out.commit()
        except OSError as exc:
            _error("io", str(exc))
            return EXIT_NUMERIC
        sys.stdout.write("\n".join(written) + "\n")
        return EXIT_OK

    try:
        text = _read_config(args.config)
        overrides = parse_overrides(args.set)
    except (OSError, ValueError) as exc:
        _error("config", str(exc), issues=[ConfigIssue("$", str(exc)).to_dict()])
        return EXIT_CONFIG

    kind = args.kind if args.command == "validate" else args.command
    res = validate(text, kind, overrides)
    if isinstance(res, list):
        _error("config", f"{len(res)} validation error(s)", issues=[i.to_dict() for i in res])
        return EXIT_CONFIG
    if args.command == "validate":
        sys.stdout.write(json.dumps(_jsonable({"tool": TOOL, "config": res.to_dict()}), indent=2) + "\n")
        return EXIT_OK

    out = Outputs(Path(args.out_dir) if args.out_dir else None)
    try:
        RUNNERS[args.command](res, out, args.out)
        out.commit()
    except (InvalidSpecError, ConfigurationError, ConfigError) as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    except IntegrationError as exc:
        _error("numerical", str(exc), type="IntegrationError", last_good_time=exc.last_good_time)
        return EXIT_NUMERIC
    except EigenSolverError as exc:
        _error("numerical", str(exc), type="EigenSolverError")
        return EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError, ValueError, RuntimeError) as exc:
        _error("numerical", str(exc), type=type(exc).__name__)
        return EXIT_NUMERIC
    except OSError as exc:
        _error("io", str(exc))
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


__all__ = ["run", "main", "fmt", "csv_text", "json_text", "Outputs", "resolve_state",
           "canonical_configs", "ladder_table", "RUNNERS", "TOOL"]


if __name__ == "__main__":  # pragma: no cover
    main()
