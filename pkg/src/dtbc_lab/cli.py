"""Command line front end: ``dtbc-lab <coeffs|pade|run1d|run2d|stability|preset>``.

Global flags go before the subcommand::

    dtbc-lab --out results --seed 7 --precision 80 run2d --c-y 0.1 --left dtbc1 ...

``run1d`` and ``run2d`` accept ``--config FILE``, a flat ``key = value`` file
(``#`` starts a comment). Command line flags override the file. Keys:

    dim             1 or 2 (default: 2 when K is present)
    x_l x_r y_b y_t domain bounds (default [-3,3] and [-2,2])
    J K             interior points per direction (1D: 999; 2D: 300 x 200)
    c_x c_y         velocity (default (1, 0))
    cfl             |mu_x| + |mu_y| (1D: 5/6; 2D: 1/2); fractions such as 5/6 are accepted
    T               final time (1D: 10; 2D: 8)
    scheme          1D closure: dtbc | soe | neumann
    left right bottom top
                    2D closures: dtbc0 | dtbc1 | dtbc2 | neumann (default dtbc0)
    soe             compress the order-0/1 kernels of the 2D closures (true/false)
    soe_M soe_N     denominator / numerator degree of the Padé stage (50 / 49)
    precision       decimal digits of the Padé stage (80)
    init_exponent   factor a in exp(-a r^2) (1D: 10; 2D: 5)
    snapshots       comma-separated snapshot times
    field_every     keep every n-th level of the field (0: none)
    metrics_every   CSV cadence of the norm series
    exit_time       1D residual is measured for t > exit_time (5)
    allow_unstable  permit order 2 on two adjacent sides
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import coefficients, output, presets
from .core import SIDES, config_from_mapping
from .soe import SoeError, build_pade, find_roots, to_soe, vieta_residuals
from .solver1d import run_1d
from .solver2d import run_2d
from .stability import gr_check_order0, gr_check_order1, gr_check_order2


def _read_pairs(path):
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected key = value")
        key, val = line.split("=", 1)
        values[key.strip()] = val.strip()
    return values


def _mapping(args, dim, keys):
    values = _read_pairs(args.config) if args.config else {}
    values["dim"] = str(dim)
    for key in keys:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = str(v)
    return values


def cmd_coeffs(args):
    seq = coefficients.gen_family(args.family, args.mu_x, args.mu_y, args.count, args.route)
    n = np.arange(args.count)
    fam = seq.family.value
    a, b = (args.mu_y, args.mu_x) if fam[0] == "T" else (args.mu_x, args.mu_y)
    asym = [""] * args.count
    with np.errstate(divide="ignore", invalid="ignore"):
        if fam[1] == "0":
            asym = coefficients.asymptotic_s0(n, a)
        elif fam[1] == "1":
            asym = coefficients.asymptotic_s1(n, a, b)
    asym = [("" if (isinstance(v, str) or k == 0) else float(v)) for k, v in zip(n, asym)]
    path = args.out / f"coeffs_{fam}.csv"
    output.write_csv(path, ["n", "value", "asymptotic"], zip(n, seq.values, asym))
    print(f"wrote {path}")
    return 0


def cmd_pade(args):
    digits = args.precision
    count = args.M + args.N + 1
    # the order-1 kernels enter the closures shifted by one index
    shift = 1 if args.family[1] == "1" else 0
    ker = coefficients.kernel_mp(args.family, args.mu_x, args.mu_y, count + shift, digits)[shift:]
    status = "valid"
    roots = []
    pade = None
    try:
        pade = build_pade(ker, args.N, args.M, digits)
        roots = find_roots(pade)
        soe = to_soe(pade, roots)
    except SoeError as exc:
        status = f"invalid: {type(exc).__name__}: {exc}"
        soe = None
    out = args.out
    if len(roots):
        r = np.array([complex(z) for z in roots])
        output.write_csv(out / "roots.csv", ["re", "im", "modulus"],
                         zip(r.real, r.imag, np.abs(r)))
    if soe is not None:
        approx = soe.coefficients(count)
        exact = np.array([float(v) for v in ker[:count]])
        output.write_csv(out / "coeffs.csv", ["k", "nu", "nu_approx", "abs_diff"],
                         zip(range(count), exact, approx, np.abs(exact - approx)))
        prod, total = vieta_residuals(pade, roots)
        print(f"min |q| = {soe.min_root_modulus:.6g}, Vieta residuals {prod:.2e} / {total:.2e}")
    print(f"{args.family} M={args.M} N={args.N} precision={digits}: {status}")
    return 0 if soe is not None else 1


def cmd_run1d(args):
    keys = ["scheme", "J", "c_x", "cfl", "T", "soe_M", "soe_N", "exit_time", "init_exponent"]
    values = _mapping(args, 1, keys)
    values.setdefault("field_every", "1")
    values["precision"] = str(args.precision)
    config = config_from_mapping(values)
    rep = run_1d(config)
    out = args.out
    output.write_metrics_1d(rep, out / "metrics.csv", config.metrics_every)
    if rep.fields is not None:
        output.write_field_1d(rep, out / "field.csv", every=args.csv_every)
        output.write_logfield(rep.fields, out / "logfield.pgm", *output.LOG_RANGE_1D)
    summary = {"scheme": config.scheme, "steps": rep.steps, "dt": rep.dt, "mu_x": rep.mu_x,
               "exit_time": rep.exit_time, "residual": rep.residual,
               "closure_seconds": rep.closure_seconds}
    output.write_json(out / "summary.json", summary)
    print(f"{config.scheme}: {rep.steps} steps, post-exit residual {rep.residual:.3e}")
    return 0


def cmd_run2d(args):
    keys = ["J", "K", "c_x", "c_y", "cfl", "T", "soe_M", "soe_N", "init_exponent", *SIDES]
    values = _mapping(args, 2, keys)
    if args.snapshots:
        values["snapshots"] = args.snapshots
    if args.soe:
        values["soe"] = "true"
    if args.allow_unstable:
        values["allow_unstable"] = "true"
    values["precision"] = str(args.precision)
    config = config_from_mapping(values)
    rep = run_2d(config)
    window = tuple(float(v) for v in args.window.split(","))
    presets._write_2d(rep, args.out, window)
    refl = presets.summary_2d(rep, window)["reflection_magnitude"]
    state = "stable" if rep.stable else f"UNSTABLE from step {rep.unstable_step}, growth rate {rep.growth_rate:.4g}"
    print(f"{rep.steps} steps, mu=({rep.mu_x:.4g}, {rep.mu_y:.4g}), {state}")
    if refl is not None:
        print(f"reflection magnitude over t in [{window[0]}, {window[1]}]: {refl:.3e}")
    return 0


def _mu_pairs(args):
    if args.grid:
        g = np.linspace(0.05, 0.9, args.grid)
        return [(a, b) for a in g for b in g if a + b < 1 - 1e-12]
    return [(args.mu_x, args.mu_y)]


def cmd_stability(args):
    rows = []
    worst = "pass"
    rank = {"pass": 0, "fail-conjecture": 1, "fail-invariant": 2}
    for i, (a, b) in enumerate(_mu_pairs(args)):
        seed = (args.seed, i)
        if args.order == 0:
            rep = gr_check_order0(a, b, args.samples, np.random.default_rng(seed))
        elif args.order == 1:
            rep = gr_check_order1(a, b, args.samples, np.random.default_rng(seed))
        else:
            rep = gr_check_order2(a, b, args.theta_samples, rng=np.random.default_rng(seed))
        d = rep.details
        rows.append((rep.order, a, b, rep.samples, rep.margin,
                     "" if rep.theta_max is None else rep.theta_max,
                     rep.invariant_failures, rep.conjecture_failures, rep.anomalies,
                     d.get("unstable_eigenvalues", ""), d.get("max_eigenvalue_modulus", ""),
                     rep.verdict))
        if rank[rep.verdict] > rank[worst]:
            worst = rep.verdict
        print(f"order {rep.order}  mu=({a:.4g}, {b:.4g})  margin {rep.margin:.3e}  {rep.verdict}")
    output.write_csv(args.out / "report.csv",
                     ["order", "mu_x", "mu_y", "samples", "margin", "theta_max",
                      "invariant_failures", "conjecture_failures", "anomalies",
                      "unstable_eigenvalues", "max_eigenvalue_modulus", "verdict"], rows)
    failed = sum(1 for r in rows if r[-1] != "pass")
    print("=" * 60)
    print(f"verdict: {worst}  ({len(rows) - failed}/{len(rows)} parameter pairs pass)")
    return 0 if worst == "pass" else 1


def cmd_preset(args):
    if args.list or not args.ids:
        for line in presets.list_presets():
            print(line)
        return 0
    unknown = [pid for pid in args.ids if pid not in presets.PRESETS]
    if unknown:
        print(f"unknown preset(s): {', '.join(unknown)}", file=sys.stderr)
        return 2
    code = 0
    for pid in args.ids:
        res = presets.run_preset(pid, args.out)
        print(res.preset.describe())
        for c in res.checks:
            print("  " + c.line())
        code = code or (0 if res.ok else 1)
    return code


def build_parser():
    p = argparse.ArgumentParser(prog="dtbc-lab", description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("dtbc_out"), help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for stability sampling")
    p.add_argument("--precision", type=int, default=80, help="decimal digits of the Padé stage")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeffs", help="dump a kernel family to CSV")
    c.add_argument("--family", default="S0", choices=[f.value for f in coefficients.Family])
    c.add_argument("--mu-x", type=float, default=5 / 6)
    c.add_argument("--mu-y", type=float, default=0.0)
    c.add_argument("--count", type=int, default=1001)
    c.add_argument("--route", default="closed", choices=["closed", "inductive"])
    c.set_defaults(func=cmd_coeffs)

    c = sub.add_parser("pade", help="compress a kernel to a sum of exponentials")
    c.add_argument("--family", default="S0", choices=["S0", "S1", "T0", "T1"])
    c.add_argument("--mu-x", type=float, default=5 / 6)
    c.add_argument("--mu-y", type=float, default=0.0)
    c.add_argument("-M", type=int, default=50)
    c.add_argument("-N", type=int, default=10)
    c.set_defaults(func=cmd_pade)

    c = sub.add_parser("run1d", help="1D leap-frog run")
    c.add_argument("--config")
    c.add_argument("--scheme", choices=["dtbc", "soe", "neumann"])
    c.add_argument("--J", type=int)
    c.add_argument("--c", dest="c_x", type=float)
    c.add_argument("--cfl")
    c.add_argument("--T", type=float)
    c.add_argument("--soe-M", dest="soe_M", type=int)
    c.add_argument("--soe-N", dest="soe_N", type=int)
    c.add_argument("--exit-time", dest="exit_time", type=float)
    c.add_argument("--init-exponent", dest="init_exponent", type=float)
    c.add_argument("--csv-every", type=int, default=10, help="level cadence of field.csv")
    c.set_defaults(func=cmd_run1d)

    c = sub.add_parser("run2d", help="2D leap-frog run")
    c.add_argument("--config")
    for side in SIDES:
        c.add_argument(f"--{side}", choices=["dtbc0", "dtbc1", "dtbc2", "neumann"])
    c.add_argument("--J", type=int)
    c.add_argument("--K", type=int)
    c.add_argument("--c-x", dest="c_x")
    c.add_argument("--c-y", dest="c_y")
    c.add_argument("--cfl")
    c.add_argument("--T", type=float)
    c.add_argument("--snapshots", help="comma-separated times")
    c.add_argument("--soe", action="store_true")
    c.add_argument("--soe-M", dest="soe_M", type=int)
    c.add_argument("--soe-N", dest="soe_N", type=int)
    c.add_argument("--init-exponent", dest="init_exponent", type=float)
    c.add_argument("--allow-unstable", action="store_true")
    c.add_argument("--window", default="5.5,8", help="reflection window t0,t1")
    c.set_defaults(func=cmd_run2d)

    c = sub.add_parser("stability", help="normal-mode checks of the side closures")
    c.add_argument("--order", type=int, choices=[0, 1, 2], default=1)
    c.add_argument("--mu-x", type=float, default=1 / 3)
    c.add_argument("--mu-y", type=float, default=1 / 6)
    c.add_argument("--grid", type=int, default=0, help="scan an n x n grid over [0.05, 0.9]^2")
    c.add_argument("--samples", type=int, default=10_000)
    c.add_argument("--theta-samples", type=int, default=64)
    c.set_defaults(func=cmd_stability)

    c = sub.add_parser("preset", help="run named experiments")
    c.add_argument("ids", nargs="*", metavar="ID", help=", ".join(presets.PRESETS))
    c.add_argument("--list", action="store_true")
    c.set_defaults(func=cmd_preset)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
