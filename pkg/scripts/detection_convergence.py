"""Detection-lemma values for shrinking bump widths against the limit target."""

import argparse

from geoflow.criteria import BumpSpec, detection_integral, detection_limit
from geoflow.fields import GridSpec, MetricField
from geoflow.geometry import SymTensorField


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--eps", default="1,0.5,0.25")
    args = ap.parse_args()
    g = MetricField.flat(GridSpec(args.n))
    T = SymTensorField.from_metric(g)
    target = detection_limit(T, BumpSpec(1.0), g.grid)
    prev = None
    print(f"limit target {target!r}")
    print(f"{'eps':>6s}{'refined':>20s}{'grid':>20s}{'error':>14s}{'ratio':>8s}")
    for eps in (float(s) for s in args.eps.split(",")):
        spec = BumpSpec(eps)
        v = detection_integral(T, spec, g)
        vg = detection_integral(T, spec, g, method="grid")
        err = v - target
        ratio = "" if prev is None else f"{prev / err:8.4f}"
        print(f"{eps:6.3f}{v:20.12f}{vg:20.12f}{err:14.6e}{ratio}")
        prev = err


if __name__ == "__main__":
    main()
