"""Delimited and JSON serialization of run results, plus plain-text plot data."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .experiments import QubitScan, RunSummary

CSV_FIELDS = ("config_hash", "trial", "variant", "p2_hat", "p3_hat", "p4_hat", "N_used",
              "p2_err", "p3_err", "p4_err", "p2_true", "p3_true", "p4_true")


def _f(x):
    return float(x)


def trial_rows(summary: RunSummary):
    h = summary.config.config_hash()
    for t in summary.trials:
        for v, rep in t.reports.items():
            yield {"config_hash": h, "trial": t.trial, "variant": v,
                   "p2_hat": _f(rep.p_hat[0]), "p3_hat": _f(rep.p_hat[1]), "p4_hat": _f(rep.p_hat[2]),
                   "N_used": _f(rep.N_used),
                   "p2_err": _f(rep.empirical_err[0]), "p3_err": _f(rep.empirical_err[1]),
                   "p4_err": _f(rep.empirical_err[2]),
                   "p2_true": _f(t.true_p[0]), "p3_true": _f(t.true_p[1]), "p4_true": _f(t.true_p[2])}


def summary_dict(summary: RunSummary) -> dict:
    out = {"config_hash": summary.config.config_hash(), "config": summary.config.to_dict(),
           "true_p": list(summary.true_p) if summary.true_p is not None else None, "variants": {}}
    for v, vs in summary.variants.items():
        out["variants"][v] = {
            "mean": vs.mean.tolist(), "std": vs.std.tolist(),
            "deviation_mean": vs.deviation_mean.tolist(), "deviation_se": vs.deviation_se.tolist(),
            "rms_error": vs.rms_error.tolist(),
            "pooled": vs.pooled.to_dict() if vs.pooled is not None else None,
        }
    out.update(summary.extra)
    return out


def summary_lines(summary: RunSummary):
    c = summary.config
    yield (f"config {c.config_hash()}: M={c.scenario.M} N={c.scenario.N} shots={c.scenario.shots} "
           f"state={c.state.kind} n_rand={c.n_rand} trials={c.trials} "
           f"{'pooled over outcomes' if c.pool_k else f'single outcome {c.outcome}'} seed={c.seed}")
    if summary.true_p is not None:
        yield "true p2 p3 p4: " + " ".join(f"{x:.6g}" for x in summary.true_p)
    for v, vs in summary.variants.items():
        yield f"{v}: mean " + " ".join(f"{x:.4f}" for x in vs.mean) + \
              " | std over trials " + " ".join(f"{x:.4f}" for x in vs.std)
        if vs.pooled is not None:
            yield f"{v}: pooled " + " ".join(f"{x:.4f}" for x in vs.pooled.p_hat) + \
                  " +- " + " ".join(f"{x:.4f}" for x in vs.pooled.empirical_err)
        else:
            yield f"{v}: mean deviation from truth " + " ".join(
                f"{d:+.4f}({s:.4f})" for d, s in zip(vs.deviation_mean, vs.deviation_se))


def write_csv(summary: RunSummary, path) -> Path:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in trial_rows(summary):
        w.writerow(row)
    for line in summary_lines(summary):
        buf.write(f"# {line}\n")
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def write_json(summary: RunSummary, path) -> Path:
    doc = {"fields": list(CSV_FIELDS), "trials": list(trial_rows(summary)), "summary": summary_dict(summary)}
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def write_results(summary: RunSummary, path, fmt: str = "csv") -> Path:
    if fmt == "csv":
        return write_csv(summary, path)
    if fmt == "json":
        return write_json(summary, path)
    raise ValueError(f"unknown format {fmt!r}")


def read_csv_rows(path) -> list[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_columns(path, header: str, columns) -> Path:
    """Whitespace-separated columns with a ``#`` header line."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    lines = ["# " + header] + [" ".join(repr(float(x)) for x in row) for row in data]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_trial_series(summary: RunSummary, variant: str, path) -> Path:
    est = summary.estimates(variant)
    idx = [t.trial for t in summary.trials]
    return write_columns(path, f"trial p2_hat p3_hat p4_hat ({variant})", [idx, *est.T])


def write_scatter(summary: RunSummary, variant: str, path) -> Path:
    est, tru = summary.estimates(variant), summary.truths()
    return write_columns(path, f"p2_true p2_hat p3_true p3_hat p4_true p4_hat ({variant})",
                         [tru[:, 0], est[:, 0], tru[:, 1], est[:, 1], tru[:, 2], est[:, 2]])


def write_scan(scan: QubitScan, path) -> Path:
    std = scan.std_table()
    return write_columns(path, f"qubits std_p2 std_p3 std_p4 ({scan.variant})", [scan.qubits, *std.T])
