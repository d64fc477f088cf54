#!/usr/bin/env python3
"""Single-threaded Toeplitz extractor throughput on this machine."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from vacqrng.extractor import benchmark_throughput


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--input-bits", type=int, default=2 ** 28)
    args = ap.parse_args()
    res = benchmark_throughput(n_input_bits=args.input_bits)
    print(f"blocks hashed:    {res['n_blocks']}")
    print(f"elapsed:          {res['elapsed_s']:.3f} s")
    print(f"input throughput: {res['input_mbit_s']:.1f} Mbit/s")
    print(f"output rate:      {res['output_mbit_s']:.1f} Mbit/s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
