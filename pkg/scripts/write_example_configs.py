"""
Write the example run configurations under docs/examples/
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from pathlib import Path

import yaml

from gradsense.cli import parse_config

EXAMPLES_DIR = Path(__file__).resolve().parent.parent / "docs" / "examples"

SQRT2_DOMAIN = {"a1": 1, "a2": "sqrt(2)"}
TOP = {"side": "top", "lo": "0", "hi": "1"}


def strategic_point():
    """One pointwise sensor at a generic location; strategic at J=3"""
    return {
        "domain": SQRT2_DOMAIN,
        "gamma": TOP,
        "modes": {"J": 3},
        "sensors": [{"kind": "internal_pointwise", "point": [0.23, 0.41], "label": "probe"}],
        "time": {"T": 1.0, "dt": 0.01},
        "initial_state": {"kind": "bump"},
    }


def center_point():
    """Pointwise sensor at the exact centre; every (odd, odd) mode is blind"""
    config = strategic_point()
    config["sensors"] = [{"kind": "internal_pointwise", "point": ["1/2", "1/2"], "label": "centre"}]
    return config


def square_two_sensors():
    """Unit square (double eigenvalues): two sensors are needed"""
    return {
        "domain": {"a1": 1, "a2": 1},
        "gamma": {"side": "right", "lo": "1/4", "hi": "3/4"},
        "modes": {"J": 2},
        "sensors": [
            {"kind": "internal_pointwise", "point": [0.23, 0.37]},
            {"kind": "internal_pointwise", "point": [0.61, 0.18]},
        ],
        "time": {"T": 1.0},
    }


def location_scan():
    """19 x 19 interior scan of one pointwise sensor at J=4 (simple spectrum; at J=5 a2=sqrt(2) repeats eigenvalues)"""
    return {
        "domain": SQRT2_DOMAIN,
        "gamma": TOP,
        "modes": {"J": 4},
        "sensors": [{"kind": "internal_pointwise", "point": [0.23, 0.41]}],
        "scan": {"nx": 19, "ny": 19, "x_range": [0.05, 0.95], "y_range": [0.05, 0.95], "sensor": 0},
        "include_gramian": False,
    }


def boundary_zone():
    """Boundary zone centred at a1/3 on the top side (non-strategic at J >= 3)"""
    return {
        "domain": {"a1": 1, "a2": 1},
        "gamma": TOP,
        "modes": {"J": 3},
        "sensors": [{
            "kind": "boundary_zone",
            "segments": [{"side": "top", "lo": "7/30", "hi": "13/30"}],
        }],
    }


def zone_and_filament():
    """Gaussian-weighted zone plus a straight filament, with a crossing check"""
    return {
        "domain": {"a1": 1.3, "a2": 0.8},
        "gamma": {"side": "bottom", "lo": "0", "hi": "1"},
        "modes": {"J": 4},
        "sensors": [
            {
                "kind": "internal_zone",
                "point": [0.37, 0.29],
                "half_widths": [0.05, 0.04],
                "distribution": {"kind": "analytic", "expression": "gaussian", "params": {"width": 0.5}},
            },
            {"kind": "filament", "vertices": [[0.71, 0.12], [1.02, 0.57]]},
        ],
        "crossing": {"radius": 0.08},
    }


def noisy_reconstruction():
    """Noisy outputs with the default regularization sigma^2 * samples"""
    return {
        "domain": SQRT2_DOMAIN,
        "gamma": {"side": "top", "lo": "1/5", "hi": "4/5"},
        "modes": {"J": 2},
        "sensors": [
            {"kind": "internal_pointwise", "point": [0.23, 0.41]},
            {"kind": "internal_pointwise", "point": [0.71, 0.93]},
        ],
        "time": {"T": 1.0, "dt": 0.01},
        "noise": {"sigma": 0.01, "seed": 7},
        "initial_state": {
            "kind": "modes",
            "coefficients": [
                {"n": 1, "m": 1, "value": 1.0},
                {"n": 1, "m": 2, "value": 0.8},
                {"n": 2, "m": 1, "value": -0.6},
                {"n": 2, "m": 2, "value": 0.5},
            ],
        },
    }


EXAMPLES = {
    "strategic_point": strategic_point,
    "center_point": center_point,
    "square_two_sensors": square_two_sensors,
    "location_scan": location_scan,
    "boundary_zone": boundary_zone,
    "zone_and_filament": zone_and_filament,
    "noisy_reconstruction": noisy_reconstruction,
}


def write_examples(directory: Path = EXAMPLES_DIR):
    """Validate every example and write it as YAML"""
    directory.mkdir(parents=True, exist_ok=True)
    for name, build in EXAMPLES.items():
        text = yaml.safe_dump(build(), sort_keys=False, default_flow_style=None)
        parse_config(text)
        (directory / f"{name}.yaml").write_text(f"# {build.__doc__}\n" + text, encoding="utf-8")
    print(f"Wrote {len(EXAMPLES)} example configs to {directory}")


if __name__ == "__main__":
    write_examples()
