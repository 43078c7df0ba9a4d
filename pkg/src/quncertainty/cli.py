"""Command line front end.

Exit codes: 0 success or positive verdict, 1 negative verdict, 2 bad input or
usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .assist import CaConfig, coherence_of_assistance, sandwich_check
from .channels import is_certain_operation, is_uncertainty_preserving, load_kraus
from .core import load_state, sample_random
from .measures import (
    MEASURE_ALIASES,
    f_max,
    f_var,
    entropy_function,
    get_function,
    measure_report,
    u_entropy,
    u_geometric,
    u_var,
)

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return f"{float(x) + 0.0:.12g}"  # + 0.0 drops the sign of -0
    return str(x)


def _emit(obj, out):
    json.dump(obj, out, indent=2, allow_nan=False)
    out.write("\n")


def cmd_measure(args, out):
    rho = load_state(args.state)
    names = [n.strip() for n in args.measures.split(",") if n.strip()]
    unknown = [n for n in names if n not in MEASURE_ALIASES]
    if unknown:
        raise UsageError(f"unknown measure(s): {', '.join(unknown)}")
    reports = []
    for name in names:
        reports += [r.to_dict() for r in measure_report(name, rho, args.log_base)]
    _emit({"state": args.state, "reports": reports}, out)
    return EXIT_OK


def cmd_verify_channel(args, out):
    channel = load_kraus(args.kraus)
    if args.check == "certain":
        verdict = is_certain_operation(channel, args.tol)
        passed = verdict.is_certain
    else:
        verdict = is_uncertainty_preserving(channel, args.tol)
        passed = verdict.is_uncertainty_preserving
    payload = verdict.to_dict()
    payload["check"] = args.check
    payload["passed"] = passed
    _emit(payload, out)
    return EXIT_OK if passed else EXIT_NEGATIVE


def _ca_config(args, seed=None):
    return CaConfig(
        ensemble_size=args.ensemble_size,
        restarts=args.restarts,
        seed=args.seed if seed is None else seed,
    )


def cmd_ca(args, out):
    rho = load_state(args.state)
    try:
        f = get_function(args.measure, args.log_base)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    result = coherence_of_assistance(f, rho, _ca_config(args))
    payload = result.to_dict()
    try:
        payload["sandwich"] = sandwich_check(f, rho, result).to_dict()
    except ValueError:
        payload["sandwich"] = None
    _emit(payload, out)
    return EXIT_OK


SWEEP_COLUMNS = ["state_id", "measure", "total", "quantum", "classical", "ca_lower", "sandwich_ok"]


def sweep_rows(dim, samples, seed, restarts=8, log_base=2.0):
    """Rows of the random-state sweep, in ``state_id`` then measure order."""
    cfg = CaConfig(restarts=restarts, seed=seed)
    for sid in range(samples):
        rho = sample_random("ginibre_mixed", dim, np.random.default_rng([seed, sid]))
        for f, report in (
            (f_var, u_var(rho, "skew")),
            (entropy_function(log_base), u_entropy(rho, log_base)),
            (f_max, u_geometric(rho)),
        ):
            ca = coherence_of_assistance(f, rho, cfg)
            ok = ca.value >= report.quantum - 1e-6 and ca.value <= report.total + 1e-6
            yield [sid, report.measure, report.total, report.quantum, report.classical, ca.value, ok]


def cmd_sweep(args, out):
    if not 2 <= args.dim <= 8:
        raise UsageError(f"--dim must be in [2, 8], got {args.dim}")
    if args.samples < 1:
        raise UsageError(f"--samples must be >= 1, got {args.samples}")
    try:
        fh = open(args.out, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc.strerror}") from None
    with fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in sweep_rows(args.dim, args.samples, args.seed, args.restarts, args.log_base):
            writer.writerow([_fmt(x) for x in row])
    _emit({"out": args.out, "rows": args.samples * 3}, out)
    return EXIT_OK


BLOCH_COLUMNS = ["x", "y", "z", "U_var", "U_s", "U_f", "is_max_uncertain", "pure"]


def bloch_grid(resolution, tol=1e-9):
    """Bloch-ball grid points with the three uncertainties in closed form.

    Coordinates are ``(2i - (R - 1)) / (R - 1)`` so an odd resolution hits
    ``z = 0`` exactly. Only points with ``x^2 + y^2 + z^2 <= 1`` are kept.
    Returns a dict of equal-length arrays keyed by :data:`BLOCH_COLUMNS`.
    """
    r = int(resolution)
    axis = (2 * np.arange(r) - (r - 1)) / (r - 1)
    x, y, z = (g.ravel() for g in np.meshgrid(axis, axis, axis, indexing="ij"))
    norm2 = x * x + y * y + z * z
    inside = norm2 <= 1 + tol
    x, y, z, norm2 = x[inside], y[inside], z[inside], norm2[inside]
    p = np.stack([(1 + z) / 2, (1 - z) / 2], axis=-1)
    f_ent = entropy_function(2.0)
    return {
        "x": x,
        "y": y,
        "z": z,
        "U_var": f_var(p),
        "U_s": f_ent(p),
        "U_f": f_max(p),
        "is_max_uncertain": np.all(np.abs(p - 0.5) <= tol, axis=-1),
        "pure": np.abs(norm2 - 1) <= tol,
    }


def bloch_state(x, y, z):
    """``(I + x X + y Y + z Z) / 2``."""
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])


def cmd_bloch_disc(args, out):
    if args.resolution < 2:
        raise UsageError(f"--resolution must be >= 2, got {args.resolution}")
    grid = bloch_grid(args.resolution)
    n = grid["x"].size
    try:
        fh = open(args.out, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc.strerror}") from None
    with fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(BLOCH_COLUMNS)
        cols = [grid[c] for c in BLOCH_COLUMNS]
        for k in range(n):
            writer.writerow([_fmt(c[k]) for c in cols])
    _emit({"out": args.out, "rows": n, "max_uncertain_rows": int(grid["is_max_uncertain"].sum())}, out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="quncertainty",
        description="Uncertainty of quantum states with respect to the computational-basis measurement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="total / quantum / classical uncertainty of a state file")
    p.add_argument("--state", required=True)
    p.add_argument("--measures", default="var,entropy,fidelity")
    p.add_argument("--log-base", type=float, default=2.0)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("verify-channel", help="certain / uncertainty-preserving check of a Kraus file")
    p.add_argument("--kraus", required=True)
    p.add_argument("--check", choices=["certain", "preserving"], default="certain")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify_channel)

    p = sub.add_parser("ca", help="lower bound on the coherence of assistance")
    p.add_argument("--state", required=True)
    p.add_argument("--measure", default="ent")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ensemble-size", type=int, default=None)
    p.add_argument("--log-base", type=float, default=2.0)
    p.set_defaults(func=cmd_ca)

    p = sub.add_parser("sweep", help="random states to CSV with the sandwich check")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--log-base", type=float, default=2.0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bloch-disc", help="qubit Bloch-ball grid to CSV")
    p.add_argument("--resolution", type=int, default=21)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bloch_disc)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args, out)
    except (ValueError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
