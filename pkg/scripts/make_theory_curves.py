#!/usr/bin/env python3
"""Emit the theory plot data: optimized min-entropy curves versus the
quantum-to-excess noise ratio, and the lower/upper bound gap versus the
mean photon number."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from vacqrng import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="curves_out")
    ap.add_argument("--points", type=int, default=40)
    args = ap.parse_args()

    out = Path(args.out)
    fig2 = cli.cmd_figure2(out, db_min=-10.0, db_max=30.0, n_points=args.points)
    appa = cli.cmd_appendix_a(out, n_min=1e-3, n_max=1e3, n_points=200,
                              dx_over_g=1e-3)
    print(f"wrote {fig2}")
    print(f"wrote {appa}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
