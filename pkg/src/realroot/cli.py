"""Command-line front end: ``realroot {schedule,trial,verify-lemmas,campaign,summarize}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import VERSION, RunConfig
from .construction import CoefficientSchedule, ParameterError, make_params, m_of, window
from .noise import NoiseSpec, sample
from .rootcount import CountOptions, count_certified
from .xreal import format_sci

EXIT_OK, EXIT_PARAM, EXIT_INTERNAL = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


def _csv_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _int_list(text: str) -> list[int]:
    return [int(float(x)) for x in _csv_list(text)]


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="realroot", description="Certified real-root counts for block-exponential random polynomials.")
    ap.add_argument("--version", action="version", version=f"realroot {VERSION}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("schedule", help="dump m_j, log c and the windows as CSV")
    s.add_argument("--alpha", required=True)
    s.add_argument("--jmax", type=int, required=True)
    s.add_argument("--out", help="file (default stdout)")

    t = sub.add_parser("trial", help="count the roots of one realization, print JSON")
    t.add_argument("--alpha", required=True)
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--dist", default="rademacher")
    t.add_argument("--p", type=float, default=0.5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--max-precision", type=int, default=4096)

    v = sub.add_parser("verify-lemmas", help="write increments.csv and events.csv")
    v.add_argument("--alpha", type=_csv_list, default=["0.3", "0.5", "0.7"])
    v.add_argument("--jhi", type=int, default=200)
    v.add_argument("--n", type=int, default=10**4, help="degree for the event scan")
    v.add_argument("--trials", type=int, default=100, help="event-scan trials (0 skips the scan)")
    v.add_argument("--dist", default="rademacher")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default=".")

    c = sub.add_parser("campaign", help="run a Monte Carlo campaign")
    c.add_argument("--config", help="key = value file; flags override it")
    c.add_argument("--alpha", type=_csv_list)
    c.add_argument("--n", type=_int_list)
    c.add_argument("--dist")
    c.add_argument("--p", type=float)
    c.add_argument("--trials", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--precision-ladder", type=_int_list)
    c.add_argument("--out")
    c.add_argument("--threads", type=int, help="worker processes (REALROOT_THREADS also caps this)")
    c.add_argument("--no-summary", action="store_true")

    m = sub.add_parser("summarize", help="summary.json and histogram.csv from trials.csv")
    m.add_argument("--out", required=True, help="campaign directory holding trials.csv")
    return ap


# -- subcommands -------------------------------------------------------------------------------


def _cmd_schedule(args) -> int:
    params = make_params(args.alpha)
    if args.jmax < 0:
        raise ParameterError("jmax must be nonnegative")
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        fh.write(f"# realroot {VERSION}\n# alpha {args.alpha} beta {params.beta} j0 {params.j0}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "m_j", "block_lo", "block_hi", "log_c", "a_j", "b_j", "nonempty"])
        for j in range(0, args.jmax + 1):
            lo, hi = m_of(params, j - 1) + 1, m_of(params, j)
            if j == 0:
                w.writerow([0, hi, lo, hi, -1, "", "", 0])
                continue
            win = window(params, j)
            w.writerow([j, hi, lo, hi, -(2**j), _num(win.a), _num(win.b), int(win.nonempty)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def _num(x) -> str:
    f = float(x)
    return repr(f) if f != float("inf") else format_sci(x)


def _cmd_trial(args) -> int:
    sched = CoefficientSchedule.build(args.alpha, args.n)
    spec = NoiseSpec(args.dist, args.p)
    r = sample(spec, args.n, args.seed)
    rep = count_certified(r, sched, CountOptions(max_precision=args.max_precision))
    out = rep.to_dict()
    out["provenance"] = {"tool": "realroot", "version": VERSION, "alpha": args.alpha, "n": args.n,
                         "dist": args.dist, "p": args.p, "seed": args.seed}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import check_increments, decay_slope, event_scan

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    head = [f"realroot {VERSION}", "verify-lemmas " + json.dumps(
        {"alpha": args.alpha, "jhi": args.jhi, "n": args.n, "trials": args.trials, "dist": args.dist,
         "seed": args.seed}, sort_keys=True)]
    rows = []
    for a in args.alpha:
        tab = check_increments(a, make_params(a).j0, args.jhi)
        rows.append(tab)
        logging.getLogger("realroot").info("alpha=%s J1=%s", a, tab.j1)
    with open(out / "increments.csv", "w", newline="") as fh:
        for line in head:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "j", "lhs_left", "lhs_right", "budget_left", "budget_right", "pass_left",
                    "pass_right", "J1"])
        for tab in rows:
            for r in tab.rows:
                w.writerow([tab.alpha, r.j, repr(r.lhs_left), repr(r.lhs_right), repr(r.budget_left),
                            repr(r.budget_right), int(r.pass_left), int(r.pass_right), tab.j1])
    spec = NoiseSpec(args.dist)
    events = []
    for a in args.alpha:
        ev = event_scan(spec, a, args.n, args.trials, args.seed)
        events.append((a, ev))
    with open(out / "events.csv", "w", newline="") as fh:
        for line in head:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "j", "kind", "trials", "failures"])
        for a, ev in events:
            for e in ev:
                w.writerow([a, e.j, e.kind, e.trials, e.failures])
    slopes = {a: decay_slope(ev, "dominance-full") for a, ev in events}
    print(json.dumps({"J1": {str(t.alpha): t.j1 for t in rows}, "dominance_full_slope": slopes}, indent=2))
    return EXIT_OK


def _campaign_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    cfg = cfg.updated(alphas=args.alpha, ns=args.n, dist=args.dist, p=args.p, trials=args.trials,
                      master_seed=args.seed, precision_ladder=args.precision_ladder, output_dir=args.out,
                      verbosity=args.verbose or None)
    return cfg.validate()


def _cmd_campaign(args) -> int:
    from .mc import run_campaign, summarize, write_summary

    cfg = _campaign_config(args)
    recs = run_campaign(cfg, workers=args.threads)
    if not args.no_summary:
        write_summary(summarize(recs), cfg.output_dir, cfg.provenance())
    errors = sum(r.status == "error" for r in recs)
    print(json.dumps({"trials": len(recs), "errors": errors, "output_dir": cfg.output_dir}))
    return EXIT_OK


def _cmd_summarize(args) -> int:
    from .mc import TRIALS_CSV, read_trials_csv, summarize, write_summary

    path = Path(args.out) / TRIALS_CSV
    if not path.exists():
        raise ParameterError(f"{path} not found")
    recs, header = read_trials_csv(path)
    prov = {"tool": "realroot", "version": VERSION, "source": TRIALS_CSV, "trials_header": header,
            "records": len(recs)}
    write_summary(summarize(recs), args.out, prov)
    print(json.dumps({"records": len(recs)}))
    return EXIT_OK


_COMMANDS = {"schedule": _cmd_schedule, "trial": _cmd_trial, "verify-lemmas": _cmd_verify,
             "campaign": _cmd_campaign, "summarize": _cmd_summarize}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError:
        return EXIT_PARAM
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"realroot: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        logging.getLogger("realroot").exception("internal failure")
        print(f"realroot: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
