"""Sweep the Bernoulli probability p with and without enhanced sparsification.

Prints mean test error per path-length bin for both conditions and writes
the sweep bundle plus its SVG chart.
"""

from common import desk_setup, parser, save

from cspath.evaluation import P_VALUES, length_binned_comparison, sweep_p

if __name__ == "__main__":
    p = parser(__doc__, "runs/sweep_p")
    p.add_argument("--bins", type=int, default=5)
    args = p.parse_args()
    ds, psi, cfg = desk_setup(args)
    sw = sweep_p(cfg, psi, ds, P_VALUES, repeats=args.repeats, thetas=(3, 0), threads=args.threads)
    es = [r for r in sw.runs if r.condition == "theta=3"]
    plain = [r for r in sw.runs if r.condition == "theta=0"]
    bins = length_binned_comparison([r.L for r in es], [r.E_test for r in es],
                                    [r.L for r in plain], [r.E_test for r in plain], args.bins)
    print(f"{'L bin':>16} {'ES':>10} {'no ES':>10}")
    for lo, hi, a, b in bins:
        print(f"{lo:7.1f}-{hi:7.1f}  {a:10.5f} {b:10.5f}")
    print("written:", save(sw, args.out))
