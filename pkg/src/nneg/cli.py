"""Command-line front end.

Parameter precedence, lowest first: built-in defaults, the file named by
``NNEG_CONFIG``, the file given with ``--config``, then command-line flags.
Config files hold ``key = value`` lines; ``#`` starts a comment and keys use
the long flag name with or without the leading dashes (``n-from`` and
``n_from`` are the same key).

Exit codes: 0 success, 1 verification failure, 2 validation error,
3 arbitrage in the quoted prices.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from . import __version__
from .errors import ArbitrageError, NNEGError, TableError
from .insurance import ReinsurerBasis
from .lattice import PolicySchedule, ReinsuranceTerms, backward_induct
from .lp import (
    BookXoL,
    VaryingLoanBook,
    build_general_instance,
    load_book,
    price_book_xol,
    require_optimal,
    sh_strategy_costs,
    solve_dual_bounds,
    solve_primal,
)
from .market import PropertyBinomial, apply_interest, crr_from_vol
from .mortality import load_sample_table, load_table
from .single import price_single, verify_certificate
from . import suites

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_VALIDATION = 2
EXIT_ARBITRAGE = 3

CONFIG_ENV = "NNEG_CONFIG"
DEFAULT_PRECISION = 6


class UsageError(NNEGError):
    pass


# -- config files ------------------------------------------------------------------


def parse_config(text: str, origin: str = "config") -> dict[str, str]:
    """Flat ``key = value`` pairs; later lines win. Raises UsageError with the line number."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{origin}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise UsageError(f"{origin}:{lineno}: empty key")
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def read_config(path: str) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read(), path)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None


# -- argument parsing --------------------------------------------------------------


LOAN_HELP = "accumulated loan at period end, or 'unit' for S0*d + 1"


def _loan_arg(text: str):
    if text.strip().lower() == "unit":
        return "unit"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'unit', got {text!r}") from None


def _loan(args, model: PropertyBinomial) -> float:
    """Resolve ``--loan``; ``unit`` puts exactly one currency unit at risk in the down state."""
    return model.down_price + 1.0 if args.loan == "unit" else args.loan


def _add_market(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("property model (give --vol, or both --u and --d)")
    g.add_argument("--s0", type=float, default=100.0, help="property price today (default 100)")
    g.add_argument("--vol", type=float, help="volatility; sets u = exp(vol), d = exp(-vol)")
    g.add_argument("--u", type=float, help="up factor")
    g.add_argument("--d", type=float, help="down factor")


def _add_reinsurance(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, help="XoL excess margin epsilon")
    p.add_argument("--eta", type=float, default=0.0, help="reinsurer loading eta (default 0)")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", help="write CSV here instead of stdout")
    p.add_argument(
        "--precision", type=int, default=DEFAULT_PRECISION,
        help="significant digits in CSV numbers (default 6; 17 round-trips a double)",
    )


def _add_multi(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loan0", type=float, help="initial loan L0")
    p.add_argument("--loan-rate", type=float, default=0.0, help="loan accrual per period g")
    p.add_argument("--horizon", type=int, help="periods T (truncated at the table's end)")
    p.add_argument("--age", type=int, help="age of the cohort at time zero")
    p.add_argument("--table", help="mortality CSV (age,qx); default: bundled sample table")
    p.add_argument("--deferment", type=float, default=0.0, help="deferment yield for the DCF comparator")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nneg",
        description="Superhedging prices for no-negative-equity guarantees.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help=f"key = value file (after ${CONFIG_ENV}, before flags)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    ps = sub.add_parser("price-single", help="one-period superhedge for n identical lives")
    ps.add_argument("--n", type=int, help="number of lives")
    ps.add_argument("--p", type=float, help="death probability over the period")
    _add_market(ps)
    ps.add_argument("--loan", type=_loan_arg, help=LOAN_HELP)
    _add_reinsurance(ps)
    ps.add_argument("--xol-price", type=float, help="XoL quote (default: binomial price at p(1+eta))")
    ps.add_argument("--r", type=float, default=0.0, help="interest rate for the payout schedule")
    ps.add_argument("--no-lp", action="store_true", help="skip the LP cross-check")

    pb = sub.add_parser("price-book", help="LP superhedge for a book of different loans")
    pb.add_argument("--book", help="book CSV (property_value,ltv,death_prob)")
    _add_market(pb)
    pb.add_argument("--xol-excess", type=float, help="XoL excess on the sum at risk")
    pb.add_argument("--xol-price", type=float, help="XoL quote")
    pb.add_argument(
        "--xol-basis", choices=["independent"],
        help="price the XoL assuming independent lives instead of --xol-price",
    )

    pm = sub.add_parser("price-multi", help="multi-period lattice superhedge")
    pm.add_argument("--n", type=int, help="number of lives")
    _add_market(pm)
    _add_multi(pm)
    _add_reinsurance(pm)
    pm.add_argument("--no-cross-check", action="store_true", help="skip last-period closed-form checks")

    sw = sub.add_parser("sweep", help="CSV of prices over a range of n")
    sw.add_argument("--mode", choices=["single", "multi"], default="single")
    sw.add_argument("--n-from", type=int)
    sw.add_argument("--n-to", type=int)
    sw.add_argument("--n-step", type=int, default=1)
    sw.add_argument("--n-list", help="comma-separated n values (instead of the range)")
    sw.add_argument("--p", type=float, help="death probability (single mode)")
    sw.add_argument("--loan", type=_loan_arg, help=LOAN_HELP + " (single mode)")
    _add_market(sw)
    _add_multi(sw)
    _add_reinsurance(sw)
    sw.add_argument("--jobs", type=int, default=1, help="worker processes (output order is fixed)")
    _add_output(sw)

    vf = sub.add_parser("verify", help="run the self-verification suites")
    vf.add_argument("--seed", type=int, default=0, help="seed for the random tuple generator")
    vf.add_argument("--suite", action="append", help="run only the named suite (repeatable)")
    # test hook: an impossible tolerance makes every numeric comparison fail
    vf.add_argument("--tol", type=float, default=suites.DEFAULT_TOL, help=argparse.SUPPRESS)
    # --config is read by a pre-pass in parse_args; accept it after the command too
    for sp in sub.choices.values():
        sp.add_argument("--config", help="key = value file (overridden by flags)")
    return parser


def _known_keys(parser: argparse.ArgumentParser) -> set[str]:
    keys = set()
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sp in action.choices.values():
                keys |= {a.dest for a in sp._actions}
        else:
            keys.add(action.dest)
    return keys - {"help", "version", "command", "config"}


def _apply_config(parser, sub, values: dict[str, str]) -> None:
    unknown = sorted(set(values) - _known_keys(parser))
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    mine = {a.dest: a for a in sub._actions}
    for key, value in values.items():
        action = mine.get(key)
        if action is None:
            continue  # belongs to another command
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            truthy = value.lower() in ("1", "true", "yes", "on")
            if not truthy and value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"config key {key}: expected a boolean, got {value!r}")
            sub.set_defaults(**{key: truthy})
        else:
            # argparse converts string defaults with the option's type
            sub.set_defaults(**{key: value})


def parse_args(argv: Sequence[str] | None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    early, _ = pre.parse_known_args(argv)
    values: dict[str, str] = {}
    env_path = os.environ.get(CONFIG_ENV)
    if env_path:
        values.update(read_config(env_path))
    if early.config:
        values.update(read_config(early.config))
    if values:
        # find the subcommand to receive the defaults
        sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        command = next((tok for tok in argv if tok in sub_action.choices), None)
        if command is not None:
            _apply_config(parser, sub_action.choices[command], values)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        raise UsageError("a command is required")
    return args


# -- validation helpers ------------------------------------------------------------


def _require(args, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"missing required parameter(s): {', '.join(missing)}")


def _model(args) -> PropertyBinomial:
    if args.vol is not None:
        if args.u is not None or args.d is not None:
            raise UsageError("give either --vol or --u/--d, not both")
        return crr_from_vol(args.s0, args.vol)
    if args.u is None or args.d is None:
        raise UsageError("property model needs --vol or both --u and --d")
    return PropertyBinomial(args.s0, args.u, args.d)


def _check_precision(args) -> None:
    if not 1 <= args.precision <= 17:
        raise UsageError(f"--precision must be between 1 and 17, got {args.precision}")


def fmt(x: float, precision: int = DEFAULT_PRECISION) -> str:
    """``precision`` significant digits, no exponent for ordinary magnitudes."""
    if x != x:
        return "nan"
    if x == 0.0:
        return "0"
    return f"{x:.{precision}g}"


# -- commands ----------------------------------------------------------------------


def cmd_price_single(args, out) -> int:
    _require(args, "n", "p", "loan", "eps")
    model = _model(args)
    basis = ReinsurerBasis(args.p, args.eps, args.eta)
    quote = price_single(model, _loan(args, model), args.n, basis, x0=args.xol_price, with_lp=not args.no_lp)
    w = out.write
    w(f"q = {model.q:.6f}   u = {model.u:.6f}   d = {model.d:.6f}\n")
    if quote.result is None:
        w("case: NONE (loan at or below the down price; the guarantee never pays)\n")
        w("cost: 0\n")
        return EXIT_OK
    res = quote.result
    w(f"xol: excess e = {quote.e:.6f}, price x0 = {quote.x0:.6g}\n")
    w(f"case: {res.case_id}\n")
    w(f"cost: {quote.cost:.6f}\n")
    w(f"per_life: {quote.per_life:.6f}\n")
    if not args.no_lp:
        w(f"lp_cost: {quote.lp_cost:.6f}\n")
    pf = quote.portfolio
    w(
        f"portfolio: puts={pf.puts:.6g} (strike {quote.put_strike:.6g}, price {quote.put_price:.6g}) "
        f"gla={pf.gla:.6g} xol={pf.xol:.6g}\n"
    )
    # the certificate lives on the normalised claim; map its value back to currency
    minimal = quote.cost - quote.normalization.scale * (res.cost - res.certified_cost)
    m = res.certificate.moments(res.e)
    rep = verify_certificate(res.certificate, res.n, res.p, res.q, res.e, res.x0, res.certified_cost)
    w(
        f"certificate: mass={m['mass']:.6f} down={m['down']:.6f} gla={m['gla']:.6f} "
        f"xol={m['xol']:.6g} expected_claim={minimal:.6f} [{'valid' if rep else 'INVALID'}]\n"
    )
    if not res.is_minimal:
        w(
            "note: closed-form hedge is not minimal for this fractional excess; "
            f"minimal cost {minimal:.6f}\n"
        )
    if args.r:
        _, payouts = apply_interest(quote.cost, args.r, [quote.normalization.scale])
        w(f"undiscounted payout per put-equivalent at r={args.r:g}: {payouts[0]:.6f}\n")
    return EXIT_OK


def cmd_price_book(args, out) -> int:
    _require(args, "book", "xol_excess")
    model = _model(args)
    try:
        with open(args.book, encoding="utf-8") as fh:
            rows = load_book(fh)
    except OSError as exc:
        raise UsageError(f"cannot read book {args.book}: {exc.strerror}") from None
    except TableError as exc:
        raise UsageError(f"{args.book}: {exc}") from None
    book = VaryingLoanBook.from_rows(model, rows)
    if args.xol_basis == "independent":
        if args.xol_price is not None:
            raise UsageError("give --xol-price or --xol-basis independent, not both")
        price = price_book_xol(book, args.xol_excess)
    elif args.xol_price is not None:
        price = args.xol_price
    else:
        raise UsageError("missing XoL quote: give --xol-price or --xol-basis independent")
    xol = BookXoL(args.xol_excess, price)
    inst = build_general_instance(model, book, xol)
    sol = require_optimal(solve_primal(inst), " in the book quotes")
    bounds = solve_dual_bounds(inst)
    sh = sh_strategy_costs(book, model.q, xol)
    w = out.write
    w(f"lives: {book.n}   q = {model.q:.6f}   sum at risk = {book.sigma:.6f}\n")
    w(f"xol: excess {xol.excess:.6g}, price {xol.price:.6g}\n")
    w(f"SH1 (xol + puts): {sh.sh1:.6f}\n")
    w(f"SH2 (life assurance): {sh.sh2:.6f}\n")
    w(f"SH3 (all puts): {sh.sh3:.6f}\n")
    w(f"LP optimum: {sol.cost:.6f}\n")
    w("holdings: " + " ".join(f"{k}={v:.6g}" for k, v in sol.holdings.items() if abs(v) > 1e-12) + "\n")
    w(f"dual bounds: [{bounds.p_low:.6f}, {bounds.p_high:.6f}]\n")
    return EXIT_OK


def _table(args):
    if args.table is None:
        return load_sample_table()
    try:
        with open(args.table, encoding="utf-8") as fh:
            return load_table(fh)
    except OSError as exc:
        raise UsageError(f"cannot read table {args.table}: {exc.strerror}") from None


def _multi_inputs(args):
    _require(args, "loan0", "horizon", "age", "eps")
    table = _table(args)
    if not table.min_age <= args.age <= table.terminal_age:
        raise UsageError(f"--age {args.age} outside the table ({table.min_age}..{table.terminal_age})")
    terms = ReinsuranceTerms(args.eps, args.eta)
    return table, terms, _model(args)


def _run_multi(n, args, table, terms, model, cross_check=True):
    sched = PolicySchedule(args.loan0, args.loan_rate, args.horizon, args.age, n)
    vol = math.log(model.u) if args.vol is None else args.vol
    return backward_induct(
        sched, table, terms, model, vol=vol, deferment=args.deferment, cross_check=cross_check
    )


def cmd_price_multi(args, out) -> int:
    _require(args, "n")
    table, terms, model = _multi_inputs(args)
    res = _run_multi(args.n, args, table, terms, model, not args.no_cross_check)
    w = out.write
    w(f"periods: {res.horizon}   lives: {res.n}   nodes with XoL: {res.xol_nodes}\n")
    w(f"v0: {res.v0:.6f}\n")
    w(f"v0_per_policy: {res.per_policy:.6f}\n")
    w(f"dcf_bs: {res.dcf_bs:.6f}\n")
    w(f"dcf_bs_per_policy: {res.dcf_bs / res.n if res.n else 0.0:.6f}\n")
    h = res.holdings[0][0, 0]
    w(f"root hedge: cash={h[0]:.6g} stock={h[1]:.6g} gla={h[2]:.6g} xol={h[3]:.6g}\n")
    return EXIT_OK


def _sweep_ns(args) -> list[int]:
    if args.n_list is not None:
        try:
            ns = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
        except ValueError:
            raise UsageError(f"--n-list must be comma-separated integers, got {args.n_list!r}") from None
        if not ns or min(ns) < 1:
            raise UsageError("--n-list needs positive integers")
        return sorted(set(ns))
    _require(args, "n_from", "n_to")
    if args.n_step < 1:
        raise UsageError("--n-step must be positive")
    if args.n_from < 1 or args.n_to < args.n_from:
        raise UsageError(f"empty range --n-from {args.n_from} --n-to {args.n_to}")
    return list(range(args.n_from, args.n_to + 1, args.n_step))


SINGLE_HEADER = ["n", "e", "x0", "case", "cost", "cost_per_life", "lp_cost", "lp_cost_per_life"]
MULTI_HEADER = ["n", "v0", "v0_per_policy", "dcf_bs", "dcf_bs_per_policy"]


def _single_row(n, args, model, prec):
    basis = ReinsurerBasis(args.p, args.eps, args.eta)
    qt = price_single(model, _loan(args, model), n, basis)
    case = qt.result.case_id if qt.result else "NONE"
    return [
        str(n), fmt(qt.e, prec), fmt(qt.x0, prec), case,
        fmt(qt.cost, prec), fmt(qt.cost / n, prec), fmt(qt.lp_cost, prec), fmt(qt.lp_cost / n, prec),
    ]


def _multi_row(n, args, table, terms, model, prec):
    res = _run_multi(n, args, table, terms, model)
    return [str(n), fmt(res.v0, prec), fmt(res.per_policy, prec), fmt(res.dcf_bs, prec), fmt(res.dcf_bs / n, prec)]


def cmd_sweep(args, out) -> int:
    _check_precision(args)
    ns = _sweep_ns(args)
    prec = args.precision
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    if args.mode == "single":
        _require(args, "p", "loan", "eps")
        model = _model(args)
        ReinsurerBasis(args.p, args.eps, args.eta)  # validate before any work
        header, job, extra = SINGLE_HEADER, _single_row, (args, model, prec)
    else:
        table, terms, model = _multi_inputs(args)
        header, job, extra = MULTI_HEADER, _multi_row, (args, table, terms, model, prec)
    if args.jobs > 1 and len(ns) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            # map yields in submission order, so rows stay sorted by n
            rows = list(pool.map(job, ns, *[[x] * len(ns) for x in extra]))
    else:
        rows = [job(n, *extra) for n in ns]
    sink = open(args.output, "w", newline="", encoding="utf-8") if args.output else out
    try:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if args.output:
            sink.close()
    return EXIT_OK


SUITES = {
    "certificates": lambda seed, tol: suites.certificate_suite(tol),
    "primal-dual": lambda seed, tol: suites.duality_suite(seed, tol=tol),
    "full-vs-symmetric": lambda seed, tol: suites.reduction_suite(seed, tol=tol),
    "lp-measures": lambda seed, tol: suites.measure_suite(seed, tol=tol),
    "large-deviations": lambda seed, tol: suites.ldp_suite(tol=tol),
    "counter-example": lambda seed, tol: suites.counterexample_suite(tol),
}


def cmd_verify(args, out) -> int:
    names = args.suite or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    failed = []
    for name in names:
        res = SUITES[name](args.seed, args.tol)
        out.write(res.summary() + "\n")
        for msg in res.failures[:5]:
            out.write(f"  property violated: {msg}\n")
        if len(res.failures) > 5:
            out.write(f"  ... and {len(res.failures) - 5} more\n")
        if not res.passed:
            failed.append(name)
    if failed:
        out.write(f"verification FAILED: {', '.join(failed)}\n")
        return EXIT_VERIFY
    out.write("verification passed\n")
    return EXIT_OK


COMMANDS = {
    "price-single": cmd_price_single,
    "price-book": cmd_price_book,
    "price-multi": cmd_price_multi,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args, out)
    except SystemExit as exc:  # argparse: --help/--version exit 0, bad flags exit 2
        return int(exc.code or 0)
    except ArbitrageError as exc:
        print(f"nneg: arbitrage: {exc}", file=sys.stderr)
        if exc.witness:
            hold = " ".join(f"{k}={v:.6g}" for k, v in exc.witness.items() if abs(v) > 1e-12)
            print(f"nneg: arbitrage portfolio: {hold}", file=sys.stderr)
        return EXIT_ARBITRAGE
    except NNEGError as exc:
        print(f"nneg: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
