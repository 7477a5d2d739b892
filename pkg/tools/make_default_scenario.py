"""Regenerate the bundled scenario files under ``src/lqlc/data/``.

Satellites are MEO vehicles placed at fixed azimuth/elevation pairs around a
Hong Kong receiver. Both geometries are desk-scale stand-ins, not recorded
epochs.

    python tools/make_default_scenario.py
"""

import json
from pathlib import Path

from lqlc.model import LlhPosition, build_linear_system, pdop
from lqlc.simulate import scenario_epoch, scenario_from_azel

RECEIVER = LlhPosition(22.294614, 114.173417, 3.0)
CLOCK_BIASES = {"GPS": 31.7, "BDS": -12.4}
DATA = Path(__file__).resolve().parents[1] / "src" / "lqlc" / "data"

# (sat_id, constellation, azimuth deg, elevation deg)
DEFAULT_LAYOUT = [
    ("G05", "GPS", 20.0, 62.0),
    ("G13", "GPS", 105.0, 28.0),
    ("G15", "GPS", 200.0, 45.0),
    ("G20", "GPS", 285.0, 22.0),
    ("G29", "GPS", 330.0, 12.0),
    ("C11", "BDS", 60.0, 15.0),
    ("C23", "BDS", 160.0, 70.0),
    ("C28", "BDS", 250.0, 35.0),
]

DENSE_LAYOUT = [
    ("G02", "GPS", 15.0, 48.0),
    ("G05", "GPS", 62.0, 74.0),
    ("G07", "GPS", 98.0, 22.0),
    ("G13", "GPS", 141.0, 55.0),
    ("G15", "GPS", 187.0, 31.0),
    ("G18", "GPS", 229.0, 66.0),
    ("G20", "GPS", 276.0, 18.0),
    ("G29", "GPS", 318.0, 40.0),
    ("C06", "BDS", 38.0, 27.0),
    ("C11", "BDS", 81.0, 52.0),
    ("C14", "BDS", 120.0, 80.0),
    ("C19", "BDS", 163.0, 15.0),
    ("C23", "BDS", 206.0, 58.0),
    ("C28", "BDS", 252.0, 36.0),
    ("C32", "BDS", 297.0, 63.0),
    ("C37", "BDS", 340.0, 20.0),
]


def write(name: str, layout, description: str) -> None:
    scenario = scenario_from_azel(RECEIVER, layout, CLOCK_BIASES)
    lin = build_linear_system(scenario_epoch(scenario), scenario.truth_state())
    doc = {"description": description, **scenario.to_dict(), "pdop": round(pdop(lin.H), 3)}
    # keep the exact receiver coordinates rather than the round-tripped ones
    doc["receiver_llh"] = {"latitude": RECEIVER.latitude, "longitude": RECEIVER.longitude,
                           "height": RECEIVER.height}
    out = DATA / name
    out.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {out} ({len(layout)} satellites, PDOP {doc['pdop']})")


if __name__ == "__main__":
    write("default_scenario.json", DEFAULT_LAYOUT,
          "Synthetic 5 GPS + 3 BDS geometry around a Hong Kong receiver; not a recorded epoch.")
    write("dense_scenario.json", DENSE_LAYOUT,
          "Synthetic 8 GPS + 8 BDS geometry around a Hong Kong receiver; not a recorded epoch.")
