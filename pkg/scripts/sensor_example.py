"""Earthquake sensors: two alarms that each work correctly in 2/3 of cases.

A silent sensor during a quake is a plain failure; with no quake the failing
sensor's reading is unknown, which makes the model imprecise.  Prints the
posterior bounds on a quake for every combination of sensor readings.

    python3 scripts/sensor_example.py [--model models/quake_sensors.json]
"""

import argparse
import itertools
from dataclasses import dataclass
from pathlib import Path

from capax.document import parse_event, parse_model
from capax.engine import enter_evidence, propagate, query_posterior
from capax.errors import ContradictionError

MODEL = Path(__file__).resolve().parent.parent / "models" / "quake_sensors.json"


@dataclass
class ExampleConfig:
    model: Path = MODEL


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", type=Path, default=ExampleConfig.model)
    cfg = ExampleConfig(ap.parse_args().model)
    base = parse_model(cfg.model.read_text())
    readings = [None, "alarm", "silent"]
    print(f"{'x':>7} {'y':>7}   P(quake | readings)")
    for rx, ry in itertools.product(readings, readings):
        model = base.copy()
        for name, value in (("x", rx), ("y", ry)):
            if value:
                enter_evidence(model, parse_event(f"{name}={value}", model.variables))
        try:
            propagate(model)
            iv = query_posterior(model, parse_event("z=quake", model.variables))
            text = f"[{iv.lower:.4f}, {iv.upper:.4f}] {iv.status.value}"
        except ContradictionError:
            text = "impossible readings"
        print(f"{rx or '-':>7} {ry or '-':>7}   {text}")


if __name__ == "__main__":
    main()
