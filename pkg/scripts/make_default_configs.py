"""Write the shipped per-controller experiment configs.

All four configs share the calibrated plant (one-time damping calibration,
see scripts/calibrate_damping.py) and the corner start used by the headline
comparison; only the controller block differs.
"""

import argparse
from pathlib import Path

from ballplate.config import ExperimentConfig, write_config
from ballplate.fuzzy import CONTROLLER_NAMES, default_controller_spec
from ballplate.plant import PlantParams

CALIBRATED_DAMPING = 0.13
PD_GAINS = (0.005, 0.2)
CORNER_MM = (150.0, 150.0)
DURATION_S = 120.0
SEED = 1234


def build_config(name: str) -> ExperimentConfig:
    return ExperimentConfig(
        controller=default_controller_spec(name),
        gains=PD_GAINS if name == "fuzzy_pd" else None,
        initial_pos=CORNER_MM,
        duration_s=DURATION_S,
        sensor="direct",
        seed=SEED,
        plant=PlantParams(viscous_damping=CALIBRATED_DAMPING),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--dest",
        default=str(Path(__file__).resolve().parents[1] / "configs"),
        help="output directory for the .cfg files",
    )
    args = parser.parse_args()
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    for name in CONTROLLER_NAMES:
        path = dest / f"{name}.cfg"
        write_config(build_config(name), path)
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
