"""Sweep the path and incoherence weights and report mean selected L and mu."""

from common import desk_setup, parser, save

from cspath.evaluation import sweep_lambda_incoh, sweep_lambda_path

if __name__ == "__main__":
    p = parser(__doc__, "runs/lambdas")
    p.add_argument("--values", type=float, nargs="+", default=[0.0, 0.01, 0.1, 1.0])
    args = p.parse_args()
    ds, psi, cfg = desk_setup(args)
    for name, fn, metric in (("lambda_path", sweep_lambda_path, "L"),
                             ("lambda_incoh", sweep_lambda_incoh, "mu")):
        sw = fn(cfg, psi, ds, args.values, repeats=args.repeats, threads=args.threads)
        for v, (mean, sd) in sw.aggregate(metric).items():
            print(f"{name}={v:<6g} mean {metric} {mean:.4f} (sd {sd:.4f})")
        save(sw, f"{args.out}/{name}")
