"""Stable on-disk formats for trajectories and run summaries.

Trajectory CSV schema (fixed header): iter, eta, n_rejections, V_before,
V_after, Vdot_before, armijo_gap, state_norm, then y0..y{m-1} filled on
snapshot rows and blank otherwise. Floats are written with shortest
round-trip decimal encoding, so parse(write(run)) reproduces every field
bit for bit and identical runs produce byte-identical files.

Summary JSON fields are fixed: status, iterations, eta_sum,
final_vdot_abs, final_grad_norm, eta_min_seen, eta_max_seen, config_echo.
"""

import csv
import json
import math

import numpy as np

from .engine import RunLog, StepRecord

__all__ = [
    "FIXED_COLUMNS",
    "write_run_csv",
    "read_run_csv",
    "build_summary",
    "write_summary_json",
]

FIXED_COLUMNS = (
    "iter",
    "eta",
    "n_rejections",
    "V_before",
    "V_after",
    "Vdot_before",
    "armijo_gap",
    "state_norm",
)


def _fmt(x):
    return repr(float(x))


def write_run_csv(run, path, dim):
    """Write one run's records; dim fixes the y0..y{m-1} column count."""
    header = list(FIXED_COLUMNS) + [f"y{i}" for i in range(dim)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for rec in run.records:
            row = [
                str(rec.iter_index),
                _fmt(rec.eta),
                str(rec.n_rejections),
                _fmt(rec.v_before),
                _fmt(rec.v_after),
                _fmt(rec.vdot_before),
                _fmt(rec.armijo_gap),
                _fmt(rec.state_norm),
            ]
            if rec.state is not None:
                row += [_fmt(v) for v in rec.state]
            else:
                row += [""] * dim
            writer.writerow(row)


def read_run_csv(path):
    """Parse a trajectory CSV back into (records, dim)."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header[: len(FIXED_COLUMNS)]) != FIXED_COLUMNS:
            raise ValueError(f"unrecognized trajectory header in {path}")
        dim = len(header) - len(FIXED_COLUMNS)
        for row in reader:
            state_cells = row[len(FIXED_COLUMNS):]
            state = None
            if any(cell != "" for cell in state_cells):
                state = np.array([float(c) for c in state_cells])
            records.append(
                StepRecord(
                    iter_index=int(row[0]),
                    eta=float(row[1]),
                    n_rejections=int(row[2]),
                    v_before=float(row[3]),
                    v_after=float(row[4]),
                    vdot_before=float(row[5]),
                    armijo_gap=float(row[6]),
                    state_norm=float(row[7]),
                    state=state,
                )
            )
    return records, dim


def etas_from_csv(path):
    records, _ = read_run_csv(path)
    return np.array([r.eta for r in records])


def run_from_csv(path):
    """Rebuild a RunLog skeleton (records + eta_sum) from a CSV."""
    records, _ = read_run_csv(path)
    log = RunLog(records=records)
    log.eta_sum = float(sum(r.eta for r in records))
    log.wall_iterations = len(records)
    if records and records[-1].state is not None:
        log.final_state = records[-1].state
    return log


def build_summary(run, fs, config_echo):
    """Machine-diffable run summary with the fixed field set."""
    etas = [r.eta for r in run.records]
    final_vdot = math.nan
    grad_norm = None
    if run.final_state is not None and np.all(np.isfinite(run.final_state)):
        final_vdot = fs.vdot(run.final_state)
        grad_norm = fs.grad_norm(run.final_state)
        if grad_norm is not None and not math.isfinite(grad_norm):
            grad_norm = None
    return {
        "status": run.termination,
        "iterations": run.wall_iterations,
        "eta_sum": run.eta_sum,
        "final_vdot_abs": abs(final_vdot) if math.isfinite(final_vdot) else None,
        "final_grad_norm": grad_norm,
        "eta_min_seen": min(etas) if etas else None,
        "eta_max_seen": max(etas) if etas else None,
        "config_echo": config_echo,
    }


def write_summary_json(summary, path):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
