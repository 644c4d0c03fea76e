"""Figure reproduction: run a protocol, write delimited results, plot data and a rendered figure."""
from __future__ import annotations

from pathlib import Path

from . import plotting, report
from .experiments import FIGURES, figure_config, run_experiment, run_qubit_scan


def reproduce_figure(which: str, seed: int = 0, outdir=".", trials: int | None = None,
                     fmt: str = "csv", fig_format: str = "png", qubits=range(1, 9),
                     workers: int = 1) -> dict:
    """Run the protocol for ``which`` and write its files into ``outdir``.

    Returns a dict with the run object(s) under ``"result"`` and written paths
    under ``"files"``.
    """
    if which not in FIGURES:
        raise ValueError(f"unknown figure {which!r}; choose from {FIGURES}")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    if which == "fig5":
        scan = run_qubit_scan(list(qubits), seed=seed, trials=trials or 200, workers=workers)
        for q, s in zip(scan.qubits, scan.summaries):
            files.append(report.write_results(s, out / f"fig5_q{q}.{fmt}", fmt))
        files.append(report.write_scan(scan, out / "fig5_plot.dat"))
        files.append(plotting.plot_std_vs_qubits(scan.qubits, scan.std_table(),
                                                 out / f"fig5.{fig_format}",
                                                 title=f"pure states, n_rand={scan.summaries[0].config.n_rand}"))
        return {"result": scan, "files": files}

    cfg = figure_config(which, seed=seed, trials=trials)
    summary = run_experiment(cfg, workers=workers)
    files.append(report.write_results(summary, out / f"{which}.{fmt}", fmt))
    if which in ("fig1", "fig2"):
        variant = "bar-exact" if which == "fig1" else "tilde-exact"
        files.append(report.write_trial_series(summary, variant, out / f"{which}_plot.dat"))
        files.append(plotting.plot_trial_series(summary.estimates(variant), out / f"{which}.{fig_format}",
                                                title=f"pure 2-qubit state, {variant}"))
    else:
        variant = cfg.variants[0]
        files.append(report.write_scatter(summary, variant, out / f"{which}_plot.dat"))
        files.append(plotting.plot_scatter(summary.truths(), summary.estimates(variant),
                                           out / f"{which}.{fig_format}",
                                           title=f"M=N={cfg.scenario.N}, n_rand={cfg.n_rand}, {variant}"))
    return {"result": summary, "files": files}
