"""Command-line interface: ``rmtrace estimate|reproduce|haar-test|oracle-suite``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import plotting, report
from .errors import RMTraceError
from .estimator import VARIANTS, forward_moments, invert_moments
from .experiments import FIGURES, ExperimentConfig, run_experiment, run_nonidentical_source
from .figures import reproduce_figure
from .haar import first_row_ks_test, haar_invariance_test, seeded_rng
from .measurement import build_scenario
from .oracle import gaussian_moment_mc, haar_moments_mc, isserlis_average, pairing_moment_numerator
from .states import (StateEnsembleSpec, load_state, make_footnote_state, make_maximally_mixed,
                     make_pure_random, trace_powers)

EXIT_OK, EXIT_CONFIG, EXIT_SELFTEST = 0, 1, 2

log = logging.getLogger("rmtrace")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


_STATE_ALIASES = {"pure": "pure-random", "footnote": "footnote-diagonal", "mixed": "maximally-mixed",
                  "file": "explicit", "alternating": "alternating-source"}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rmtrace", description="Estimate Tr rho^n from simulated random measurements.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("estimate", help="run a custom experiment")
    e.add_argument("--config", type=Path, help="JSON config; flags override its values")
    e.add_argument("--scenario", choices=["i", "ii", "ii'", "photon-modes", "qubits-with-ancilla", "bare-qubits"])
    g = e.add_mutually_exclusive_group()
    g.add_argument("--qubits", type=int)
    g.add_argument("--dim", type=int)
    e.add_argument("--embed", type=int, help="total rotated dimension N")
    e.add_argument("--ancillas", type=int)
    e.add_argument("--state", choices=sorted(_STATE_ALIASES) + list(_STATE_ALIASES.values()))
    e.add_argument("--exponent", type=float)
    e.add_argument("--state-file", action="append", type=Path, default=None)
    e.add_argument("--fresh-state", action="store_true", default=None,
                   help="draw a new random state for every trial")
    e.add_argument("--n-rand", type=int)
    e.add_argument("--trials", type=int)
    e.add_argument("--shots", type=int, help="0 = exact probabilities")
    e.add_argument("--seed", type=int)
    e.add_argument("--variant", action="append", choices=VARIANTS)
    k = e.add_mutually_exclusive_group()
    k.add_argument("--pool-k", dest="pool_k", action="store_true", default=None)
    k.add_argument("--single-k", dest="pool_k", action="store_false")
    e.add_argument("--outcome", type=int)
    e.add_argument("--pool-mode", choices=["moments", "estimates"])
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--out", type=Path)
    e.add_argument("--format", choices=["csv", "json"], default="csv")
    e.add_argument("--figure", type=Path, help="also render a figure (png/svg/pdf by suffix)")

    r = sub.add_parser("reproduce", help="reproduce one of the figure protocols")
    r.add_argument("figure", choices=FIGURES)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trials", type=int)
    r.add_argument("--max-qubits", type=int, default=8, help="fig5 only")
    r.add_argument("--out", type=Path, default=Path("."), help="output directory")
    r.add_argument("--format", choices=["csv", "json"], default="csv")
    r.add_argument("--fig-format", choices=["png", "svg", "pdf"], default="png")
    r.add_argument("--workers", type=int, default=1)

    h = sub.add_parser("haar-test", help="statistical certification of the Haar sampler")
    h.add_argument("--embed", type=int, default=4, help="unitary dimension N")
    h.add_argument("--samples", type=int, default=100_000)
    h.add_argument("--threshold", type=float, default=4.0)
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--no-phase-fix", action="store_true", help=argparse.SUPPRESS)

    o = sub.add_parser("oracle-suite", help="check closed-form moments against brute-force oracles")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--samples", type=int, default=100_000)
    return p


def _config_from_args(a) -> ExperimentConfig:
    d = json.loads(a.config.read_text()) if a.config else {}
    sc = dict(d.get("scenario", {}))
    if any(x is not None for x in (a.scenario, a.qubits, a.dim, a.embed, a.ancillas)):
        kind = a.scenario
        if kind is None:
            if a.dim is not None:
                kind = "photon-modes"
            elif a.ancillas:
                kind = "qubits-with-ancilla"
            elif a.embed is not None and a.qubits is not None and a.embed != 2 ** a.qubits:
                kind = "photon-modes"
            else:
                kind = sc.get("kind", "bare-qubits")
        dim = a.dim
        if kind in ("photon-modes", "i") and dim is None and a.qubits is not None:
            dim = 2 ** a.qubits
        sc = {"kind": kind, "qubits": a.qubits, "dim": dim, "ancillas": a.ancillas,
              "embed": a.embed, "shots": sc.get("shots", 0)}
    if a.shots is not None:
        sc["shots"] = a.shots
    if not sc:
        raise RMTraceError("no scenario given: use --qubits or --dim (or --config)")
    d["scenario"] = sc

    st = dict(d.get("state", {"kind": "pure-random"}))
    if a.state is not None:
        st = {"kind": _STATE_ALIASES.get(a.state, a.state)}
    if a.exponent is not None:
        st["exponent"] = a.exponent
    if a.state_file:
        from .states import state_to_dict
        st["components"] = [state_to_dict(load_state(f)) for f in a.state_file]
    d["state"] = st
    for key, val in (("n_rand", a.n_rand), ("trials", a.trials), ("seed", a.seed),
                     ("pool_k", a.pool_k), ("outcome", a.outcome), ("pool_mode", a.pool_mode),
                     ("fresh_state", a.fresh_state)):
        if val is not None:
            d[key] = val
    if a.variant:
        d["variants"] = list(dict.fromkeys(a.variant))
    return ExperimentConfig.from_dict(d)


def cmd_estimate(a) -> int:
    cfg = _config_from_args(a)
    if cfg.state.kind == "alternating-source":
        rep = run_nonidentical_source(cfg, workers=a.workers)
        summary = rep.summary
        summary.extra["target_trace_powers"] = list(rep.target)
        summary.extra["shift_operator_values"] = list(rep.shift_values)
        lines = list(report.summary_lines(summary)) + list(rep.lines())
    else:
        summary = run_experiment(cfg, workers=a.workers)
        lines = list(report.summary_lines(summary))
    for line in lines:
        print(line)
    if a.out:
        report.write_results(summary, a.out, a.format)
        print(f"wrote {a.out}")
    if a.figure:
        v = cfg.variants[0]
        if cfg.fresh_state and cfg.state.random:
            plotting.plot_scatter(summary.truths(), summary.estimates(v), a.figure, title=v)
        else:
            plotting.plot_trial_series(summary.estimates(v), a.figure, title=v)
        print(f"wrote {a.figure}")
    return EXIT_OK


def cmd_reproduce(a) -> int:
    res = reproduce_figure(a.figure, seed=a.seed, outdir=a.out, trials=a.trials, fmt=a.format,
                           fig_format=a.fig_format, qubits=range(1, a.max_qubits + 1), workers=a.workers)
    result = res["result"]
    if a.figure == "fig5":
        for q, row in zip(result.qubits, result.std_table()):
            print(f"Q={q}: std p2={row[0]:.4f} p3={row[1]:.4f} p4={row[2]:.4f}")
    else:
        for line in report.summary_lines(result):
            print(line)
    for f in res["files"]:
        print(f"wrote {f}")
    return EXIT_OK


def cmd_haar_test(a) -> int:
    rng = seeded_rng(a.seed, 0)
    rep = haar_invariance_test(a.embed, a.samples, rng, threshold=a.threshold, phase_fix=not a.no_phase_fix)
    for line in rep.lines():
        print(line)
    ok = rep.passed
    ks = first_row_ks_test(a.embed, min(a.samples, 10_000), seeded_rng(a.seed, 1), phase_fix=not a.no_phase_fix)
    if ks is not None:
        print(f"KS test |U_00|^2 vs (N-1)(1-p)^(N-2): D={ks.statistic:.4f} p={ks.pvalue:.3f}")
        ok = ok and ks.pvalue > 0.01
    return EXIT_OK if ok else EXIT_SELFTEST


def oracle_suite(seed: int = 0, samples: int = 100_000):
    """Yield ``(name, passed, detail)`` for each oracle check."""
    rng = seeded_rng(seed, 7)
    # pairing sums against Gaussian Monte Carlo
    for name, idx, N in [("K=1 diagonal", ([0], [0], [0], [0]), 16),
                         ("K=2 all-equal", ([0, 0], [0, 0], [0, 0], [0, 0]), 16),
                         ("K=2 mismatched", ([0, 1], [0, 0], [0, 0], [0, 0]), 16)]:
        exact = isserlis_average(*idx, N)
        m, se = gaussian_moment_mc(*idx, N, samples, rng)
        z = abs(m - exact) / se if se > 0 else 0.0
        yield f"gaussian pairing {name}", z < 4, f"exact={exact:.6g} mc={m:.6g} z={z:.2f}"
    # pairing contraction reproduces the moment numerators
    for M in (2, 3):
        rho = make_footnote_state(M, 2.0, rng)
        p2, p3, p4 = trace_powers(rho)
        want = [1 + p2, 1 + 3 * p2 + 2 * p3, 1 + 3 * p2 ** 2 + 6 * p2 + 8 * p3 + 6 * p4]
        got = [pairing_moment_numerator(rho.data, n) for n in (2, 3, 4)]
        err = max(abs(g - w) for g, w in zip(got, want))
        yield f"pairing contraction M={M}", err < 1e-10, f"max deviation {err:.2e}"
    # Haar Monte Carlo against the exact forward moments
    for N in (2, 4, 8):
        for label, rho in [("pure", make_pure_random(N, rng)), ("footnote-E2", make_footnote_state(N, 2.0, rng)),
                           ("maximally-mixed", make_maximally_mixed(N))]:
            fwd = forward_moments(*trace_powers(rho), N)
            m, se = haar_moments_mc(rho, N, samples, rng)
            z = np.where(se > 0, np.abs(m - fwd) / np.where(se > 0, se, 1), np.abs(m - fwd) / 1e-12)
            yield (f"haar moments N={N} {label}", bool(np.all(z[1:] < 4)),
                   "z=" + " ".join(f"{x:.2f}" for x in z[1:]))
    # round trip
    worst = 0.0
    for N in (4, 32):
        for _ in range(50):
            rho = make_footnote_state(min(N, 4), 2.0, rng)
            p = np.array(trace_powers(rho))
            worst = max(worst, float(np.max(np.abs(invert_moments(forward_moments(*p, N), N) - p))))
    yield "forward/inverse round trip", worst < 1e-10, f"max deviation {worst:.2e}"


def cmd_oracle_suite(a) -> int:
    ok = True
    for name, passed, detail in oracle_suite(a.seed, a.samples):
        ok &= bool(passed)
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if ok else EXIT_SELFTEST


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"estimate": cmd_estimate, "reproduce": cmd_reproduce, "haar-test": cmd_haar_test,
                "oracle-suite": cmd_oracle_suite}
    try:
        return handlers[a.command](a)
    except (RMTraceError, OSError, json.JSONDecodeError) as exc:
        print(f"rmtrace: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
