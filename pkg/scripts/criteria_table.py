"""Run the criteria suite on a family of metrics and print one row per metric.

Usage: python3 scripts/criteria_table.py [--n 64] [--mode spectral]
"""

import argparse

from geoflow.criteria import run_criteria_suite
from geoflow.fields import GridSpec, MetricField, eval_expression

METRICS = {
    "flat": None,
    "conformal 0.2cos(x)": ("conformal", "0.2*cos(x)"),
    "conformal 0.1cos(x+y)": ("conformal", "0.1*cos(x + y)"),
    "warped exp(0.4 sin y)dx^2+dy^2": ("general", ("exp(0.4*sin(y))", "0", "1")),
    "general": ("general", ("1.2 + 0.3*cos(y)", "0.2*sin(x + y)", "1 + 0.25*sin(x)")),
}


def build(spec, grid, name):
    if spec is None:
        return MetricField.flat(grid)
    kind, arg = spec
    if kind == "conformal":
        return MetricField.conformal(grid, eval_expression(arg, grid), name)
    return MetricField(grid, *(eval_expression(e, grid).values for e in arg), name)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--mode", default="spectral")
    args = ap.parse_args()
    grid = GridSpec(args.n, args.mode)
    header = None
    for name, spec in METRICS.items():
        rep = run_criteria_suite(build(spec, grid, name))
        if header is None:
            header = [c.name for c in rep.conditions]
            print(f"{'metric':34s}" + "".join(f"{h[:14]:>16s}" for h in header) + "   overall")
        print(f"{name:34s}" + "".join(f"{c.residual:16.3e}" for c in rep.conditions) + f"   {rep.overall}")


if __name__ == "__main__":
    main()
