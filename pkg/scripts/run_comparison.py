"""Reproduce the headline four-controller comparison from the shipped configs.

Runs all four controllers from the corner start on the calibrated plant and
writes the ranked table (comparison.csv / comparison.txt) to --out-dir.
Pass --sensor vision to run the full synthetic-camera loop instead of
direct state feedback (slower; uses each config's seed).
"""

import argparse
import sys
from pathlib import Path

from ballplate.cli import main as cli_main
from ballplate.fuzzy import CONTROLLER_NAMES


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out/comparison")
    parser.add_argument("--sensor", choices=("direct", "vision"), default=None)
    parser.add_argument(
        "--configs",
        default=str(Path(__file__).resolve().parents[1] / "configs"),
        help="directory containing the per-controller .cfg files",
    )
    args = parser.parse_args()

    cfg_dir = Path(args.configs)
    paths = [str(cfg_dir / f"{name}.cfg") for name in CONTROLLER_NAMES]
    argv = ["compare", *paths, "--out-dir", args.out_dir]
    if args.sensor:
        argv += ["--sensor", args.sensor]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
