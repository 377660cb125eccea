"""Command-line front end: ``wshsa <command> INSTANCE [options]``.

Every command prints one JSON report (sorted keys) to stdout or ``--out``.
Exit status is 0 only when every executed check passes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .analysis import analyze
from .model import InstanceError, fmt_user, read_instance
from .rates import RateKind, communication_rates, per_user_key_profile, rate_from_report
from .scheme import (SchemeError, SynthesisFailed, export_scheme, import_scheme, simulate,
                     synthesize_instance)
from .security import BudgetExceeded, DEFAULT_BUDGET, audit_lemmas, oracle_check, verify

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 3
EXIT_SYNTHESIS = 4
EXIT_BUDGET = 5
EXIT_SCHEME = 6


def digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def default_budget() -> int:
    raw = os.environ.get("WSHSA_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


class Run:
    """Pipeline state shared by the stages of one command."""

    def __init__(self, args):
        self.args = args
        self.report: dict = {}
        self.ok = True
        self.timings: dict[str, float] = {}
        auto_close = False if getattr(args, "no_closure", False) else None
        self.inst = read_instance(args.instance, auto_close=auto_close)
        self.report["instance_digest"] = digest(self.inst.dumps())
        self.aux, self.cls = self._timed("analyze", lambda: analyze(self.inst))
        self.rate = rate_from_report(self.inst, self.aux, self.cls)
        self.scheme = None
        self.exit_code = None

    def _timed(self, name, fn):
        t0 = time.perf_counter()
        out = fn()
        self.timings[name] = round(time.perf_counter() - t0, 4)
        return out

    def add_analysis(self):
        self.report["aux"] = self.aux.to_dict()
        self.report["class"] = self.cls.value
        if self.rate.lp is not None:
            self.report["lp"] = self.rate.lp.dumps().splitlines()

    def add_rate(self):
        self.report["class"] = self.cls.value
        self.report["rate"] = self.rate.to_dict()
        self.report["optimal_total_key_rate"] = self.rate.describe()
        if self.rate.kind is not RateKind.INFEASIBLE:
            rx, ry = communication_rates(self.inst)
            self.report["communication_rates"] = {"Rx": str(rx), "Ry": str(ry)}
            prof = per_user_key_profile(self.inst, self.rate, self.aux)
            self.report["key_profile"] = {fmt_user(x): str(v) for x, v in sorted(prof.items())}

    def obtain_scheme(self) -> bool:
        """Import or synthesize a scheme; False (with the reason recorded) if none."""
        args = self.args
        if getattr(args, "scheme", None):
            self.scheme = import_scheme(Path(args.scheme).read_text())
            self.scheme.check_dimensions(self.inst)
            self.report["scheme_source"] = "imported"
        elif getattr(args, "synthesize", False):
            if self.rate.kind is RateKind.INFEASIBLE:
                self.report["synthesis"] = {"attempted": False, "reason": "infeasible"}
                self.ok = False
                self.exit_code = EXIT_SYNTHESIS
                return False
            outcome = self._timed("synthesize", lambda: synthesize_instance(
                self.inst, q=args.q, seed=args.seed))
            if outcome.result is None:
                self.report["synthesis"] = {"attempted": True, "error": outcome.error}
                self.ok = False
                self.exit_code = EXIT_SYNTHESIS
                return False
            res = outcome.result
            self.scheme = res.scheme
            self.report["synthesis"] = {
                "attempted": True,
                "method": res.method,
                "attempts": res.attempts,
                "notes": res.plan.notes,
                "consistent_with_rate": outcome.consistent,
            }
            self.report["scheme_source"] = "synthesized"
            if not outcome.consistent:
                self.ok = False
        else:
            raise SchemeError("this command needs --scheme FILE or --synthesize")
        s = self.scheme
        self.report["scheme_digest"] = digest(s.dumps())
        self.report["scheme"] = {"q": s.q, "L": s.L, "Lz": s.Lz}
        self.report["achieved_rate"] = str(s.rate)
        if getattr(args, "scheme_out", None):
            Path(args.scheme_out).write_text(export_scheme(s))
        return True

    def add_verify(self):
        sec = self._timed("verify", lambda: verify(self.inst, self.scheme))
        self.report["security"] = sec.to_dict()
        self.ok &= sec.all_pass
        self.add_oracle()

    def add_oracle(self):
        budget = self.args.budget if self.args.budget is not None else default_budget()
        s = self.scheme
        states = s.q ** (self.inst.K * s.L + s.Lz)
        if states > budget:
            self.report["oracle"] = {"status": "skipped", "states": states, "budget": budget}
            return
        result = self._timed("oracle", lambda: oracle_check(
            self.inst, s, budget, self.args.oracle_seconds))
        self.report["oracle"] = {"states": states, **result}
        self.ok &= result["mismatches"] == 0

    def add_audit(self):
        audit = self._timed("audit", lambda: audit_lemmas(self.inst, self.scheme, self.aux))
        self.report["lemma_audit"] = audit.to_dict()
        self.ok &= audit.all_pass

    def emit(self):
        if getattr(self.args, "timings", False):
            self.report["timings"] = self.timings
        self.report["all_pass"] = self.ok
        write_report(self.report, self.args.out)
        if self.exit_code is not None:
            return self.exit_code
        return EXIT_OK if self.ok else EXIT_CHECK_FAILED


def write_report(report: dict, out: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_analyze(args) -> int:
    run = Run(args)
    run.add_analysis()
    return run.emit()


def cmd_rate(args) -> int:
    run = Run(args)
    run.add_rate()
    return run.emit()


def cmd_synthesize(args) -> int:
    run = Run(args)
    run.add_rate()
    args.synthesize = True
    if run.obtain_scheme() and args.verify:
        run.add_verify()
    return run.emit()


def cmd_verify(args) -> int:
    run = Run(args)
    run.add_rate()
    if run.obtain_scheme():
        run.add_verify()
    return run.emit()


def cmd_simulate(args) -> int:
    run = Run(args)
    if not run.obtain_scheme():
        return run.emit()
    rng = np.random.default_rng(args.seed)
    traces = [simulate(run.inst, run.scheme, rng, args.seed) for _ in range(args.rounds)]
    correct = sum(t.correct for t in traces)
    run.report["simulation"] = {"seed": args.seed, "rounds": args.rounds, "correct": correct}
    if args.trace_out and traces:
        Path(args.trace_out).write_text(json.dumps(traces[0].to_dict(), sort_keys=True, indent=1))
    run.ok &= correct == args.rounds
    return run.emit()


def cmd_audit(args) -> int:
    run = Run(args)
    if not run.obtain_scheme():
        return run.emit()
    sec = verify(run.inst, run.scheme)
    run.report["security"] = sec.to_dict()
    run.ok &= sec.all_pass
    run.add_audit()
    return run.emit()


def sweep_rows(directory: Path, q=None, seed: int = 0) -> list[dict]:
    rows = []
    for path in sorted(directory.glob("*.json")):
        row = {"instance": path.name}
        try:
            inst = read_instance(path)
        except (InstanceError, OSError) as exc:
            row["error"] = str(exc)
            rows.append(row)
            continue
        report, cls = analyze(inst)
        rate = rate_from_report(inst, report, cls)
        row["class"] = cls.value
        row["rate"] = rate.describe()
        if rate.kind is RateKind.INFEASIBLE:
            row["synthesis"] = "not attempted"
            row["verification"] = "n/a"
            rows.append(row)
            continue
        outcome = synthesize_instance(inst, q=q, seed=seed)
        if outcome.result is None:
            row["synthesis"] = "failed"
            row["verification"] = "n/a"
        else:
            row["synthesis"] = "ok"
            row["achieved_rate"] = str(outcome.achieved)
            row["verification"] = "pass" if outcome.consistent else "rate mismatch"
        rows.append(row)
    return rows


def cmd_sweep(args) -> int:
    rows = sweep_rows(Path(args.corpus), q=args.q, seed=args.seed)
    bad = [r for r in rows if r.get("verification") == "rate mismatch" or r.get("synthesis") == "failed"]
    write_report({"rows": rows, "all_pass": not bad}, args.out)
    return EXIT_OK if not bad else EXIT_CHECK_FAILED


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wshsa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("instance", help="instance JSON file")
            sp.add_argument("--no-closure", action="store_true",
                            help="reject non-monotone families instead of closing them")
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--q", type=int, default=None, help="prime field size override")
        sp.add_argument("--budget", type=int, default=None,
                        help="state budget for the exhaustive oracle (env WSHSA_BUDGET)")
        sp.add_argument("--timings", action="store_true", help="include stage timings")
        sp.add_argument("--oracle-seconds", type=float, default=20.0,
                        help="wall-clock limit for the exhaustive oracle cross-check")

    def scheme_source(sp):
        sp.add_argument("--scheme", help="scheme JSON file to import")
        sp.add_argument("--synthesize", action="store_true", help="synthesize a scheme instead")
        sp.add_argument("--scheme-out", help="write the scheme used here")

    sp = sub.add_parser("analyze", help="derived quantities and condition class")
    common(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("rate", help="optimal total key rate or bounds")
    common(sp)
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("synthesize", help="build a key scheme achieving the rate")
    common(sp)
    sp.add_argument("--verify", action="store_true", help="also run the security verifier")
    sp.add_argument("--scheme-out", help="write the synthesized scheme here")
    sp.set_defaults(func=cmd_synthesize, scheme=None)

    sp = sub.add_parser("verify", help="check correctness and every security constraint")
    common(sp)
    scheme_source(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("simulate", help="run protocol rounds on random inputs")
    common(sp)
    scheme_source(sp)
    sp.add_argument("--rounds", type=int, default=10)
    sp.add_argument("--trace-out", help="write the first round's trace here")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("audit", help="evaluate the converse lemma inequalities")
    common(sp)
    scheme_source(sp)
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("sweep", help="run the pipeline over a directory of instances")
    sp.add_argument("corpus", help="directory of instance JSON files")
    common(sp, instance=False)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SynthesisFailed as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_SYNTHESIS
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SchemeError as exc:
        print(f"scheme error: {exc}", file=sys.stderr)
        return EXIT_SCHEME


if __name__ == "__main__":
    sys.exit(main())
