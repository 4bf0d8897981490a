"""Command-line entry point (``v2x-market``)."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .clearing import DEFAULT_STATE_BUDGET, clear_bruteforce, clear_day
from .errors import MarketError, StageError
from .fileio import emit_report, load_scenario
from .frequency import PeakLedger, fr_payment
from .model import adjusted_demand, format_pence
from .reliability import active_set, supply_distribution
from .simulator import run_scenario, sweep
from .vcg import payment_schedule


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except MarketError as exc:
        raise StageError(name, exc) from exc


def _load(args):
    try:
        s = load_scenario(args.scenario)
    except MarketError as exc:
        raise StageError("load", exc) from exc
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise StageError("load", f"{args.scenario}: {exc}") from exc
    if getattr(args, "seed", None) is not None:
        s = dataclasses.replace(s, seed=args.seed)
    return s


def _clearer(args):
    if args.oracle:
        return lambda b, d, m: clear_bruteforce(b, d, m)
    return lambda b, d, m: clear_day(b, d, m, state_budget=args.state_budget)


def _inputs(s):
    book = _stage("validate", s.validate)
    return book, adjusted_demand(s.demand), s.prices["day-ahead"].prices


def _emit(args, obj, human: str) -> None:
    if args.format == "json":
        sys.stdout.write(json.dumps(obj, indent=2) + "\n")
    else:
        sys.stdout.write(human)


def cmd_validate(args) -> None:
    s = _load(args)
    book, _, _ = _inputs(s)
    obj = {
        "ok": True,
        "contracts": len(book.contracts),
        "bundles": len(book.bundles),
        "fleets": len(s.fleets),
        "evs": len(s.evs),
        "peaks": [list(r) for r in s.timeline.peak_ranges()],
    }
    _emit(args, obj, f"ok: {obj['contracts']} contracts, {obj['bundles']} bundles, "
                     f"{obj['fleets']} fleets, {obj['evs']} EVs\n")


def cmd_clear(args) -> None:
    s = _load(args)
    book, dhat, m = _inputs(s)
    alloc = _stage("clear", _clearer(args), book, dhat, m)
    obj = {
        "accepted": list(alloc.accepted),
        "social_savings": format_pence(alloc.value),
        "per_hhp_supply": list(alloc.per_hhp_supply),
    }
    human = f"accepted: {', '.join(alloc.accepted) or '-'}\nsocial savings: {obj['social_savings']}\n"
    _emit(args, obj, human)


def cmd_pay(args) -> None:
    s = _load(args)
    book, dhat, m = _inputs(s)
    sched = _stage("pay", payment_schedule, book, dhat, m, clear=_clearer(args))
    obj = {
        "accepted": list(sched.allocation.accepted),
        "payments": {f: format_pence(p) for f, p in sorted(sched.payments.items())},
    }
    human = "".join(f"{f:<12}{p:>14}\n" for f, p in obj["payments"].items())
    _emit(args, obj, human)


def cmd_reliability(args) -> None:
    s = _load(args)
    book, dhat, m = _inputs(s)
    alloc = _stage("clear", _clearer(args), book, dhat, m)
    active = _stage("reliability", active_set, book, alloc.accepted)
    rows = []
    for h in sorted(active.by_hhp()):
        d = _stage("reliability", supply_distribution, active, h)
        rows.append({
            "hhp": h,
            "mean_size": d.mean_size,
            "mean_prob": d.mean_prob,
            "x_max": d.x_max,
            "trials": d.trials,
            "grid": d.grid.tolist(),
            "pmf": d.pmf.tolist(),
        })
    human = "".join(
        f"hhp {r['hhp']}: x_max {r['x_max']} kWh, {r['trials']} trials of "
        f"{r['mean_size']:g} kWh at p {r['mean_prob']:.4f}\n"
        for r in rows
    ) or "no accepted contracts\n"
    _emit(args, rows, human)


def cmd_fr_quote(args) -> None:
    s = _load(args)
    book, dhat, m = _inputs(s)
    alloc = _stage("clear", _clearer(args), book, dhat, m)
    active = _stage("fr", active_set, book, alloc.accepted)
    ledger = PeakLedger(s.timeline)
    hhps = [args.hhp] if args.hhp is not None else sorted({h for e in s.evs for h in e.plugged_hhps})
    rows = []
    for h in hhps:
        plugged = [e.state() for e in sorted(s.evs, key=lambda e: e.ev_id) if h in e.plugged_hhps]
        for ev in plugged:
            q = _stage("fr", fr_payment, ev, h, active, plugged, ledger, s.fr,
                       s.prices["balancing"][h], m[h], dhat[h])
            rows.append({
                "ev": q.ev_id,
                "hhp": h,
                "export_share": q.export_share,
                "import_share": q.import_share,
                "payment": format_pence(q.payment_milli),
            })
    human = "".join(
        f"hhp {r['hhp']:>2} {r['ev']:<10} ex {r['export_share']:.3f} im {r['import_share']:.3f} "
        f"pay {r['payment']:>12}\n"
        for r in rows
    ) or "no plugged EVs\n"
    _emit(args, rows, human)


def cmd_simulate(args) -> None:
    s = _load(args)
    st = run_scenario(s, oracle=args.oracle, state_budget=args.state_budget)
    data = emit_report(st, "machine" if args.format == "json" else "human")
    if args.output:
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(Decimal(text))
    except InvalidOperation:
        raise StageError("sweep", f"bad axis value {text!r}") from None


def cmd_sweep(args) -> None:
    s = _load(args)
    values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
    rows = _stage("sweep", sweep, s, args.axis, values, oracle=args.oracle, state_budget=args.state_budget)
    money = {"social_savings", "payments_total", "fines_total", "balancing_cost",
             "fr_payments_total", "served_value", "platform_utility"}
    rows = [{k: (format_pence(v) if k in money else v) for k, v in r.items()} for r in rows]
    if args.format == "json":
        sys.stdout.write(json.dumps(rows, indent=2) + "\n")
        return
    cols = ["value", "unmet_kwh", "balancing_kwh", "fines_total", "fr_payments_total",
            "platform_utility", "carbon_g"]
    sys.stdout.write("".join(f"{c:>18}" for c in cols) + "\n")
    for r in rows:
        sys.stdout.write("".join(f"{str(r[c]):>18}" for c in cols) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="v2x-market", description="V2X energy-export auction tools")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--format", choices=("human", "json"), default="human")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--oracle", action="store_true", help="clear by exhaustive search")
        sp.add_argument("--state-budget", type=int, default=DEFAULT_STATE_BUDGET)
        sp.set_defaults(func=fn)
        return sp

    add("validate", cmd_validate, "check a scenario file")
    add("clear", cmd_clear, "winner determination")
    add("pay", cmd_pay, "VCG payment schedule")
    add("reliability", cmd_reliability, "supply distribution per hhp")
    fq = add("fr-quote", cmd_fr_quote, "frequency-regulation quotes for the plug-in roster")
    fq.add_argument("--hhp", type=int, default=None)
    sim = add("simulate", cmd_simulate, "full seeded run")
    sim.add_argument("-o", "--output", default=None)
    sw = add("sweep", cmd_sweep, "KPI table over one scenario parameter")
    sw.add_argument("--axis", required=True, help="e.g. sm, const_ex, fr.const_im, seed")
    sw.add_argument("--values", required=True, help="comma-separated values")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MarketError as exc:
        print(f"error: [{args.command}] {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
