"""How many alerts the demo flows raise as the decrease/increase
thresholds move.  Uses demo/registry.json and demo/flows.csv."""

import json
from pathlib import Path

from cbam.ingest import parse_flows
from cbam.registry import load_registry
from cbam.surveillance import SurveillanceParams, scan
from cbam.taxonomy import default_taxonomy

DEMO = Path(__file__).resolve().parent.parent / "demo"

registry = load_registry(json.loads((DEMO / "registry.json").read_text()))
with open(DEMO / "flows.csv", newline="") as fh:
    flows = parse_flows(fh)
annex = default_taxonomy().annex

thetas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
print("theta_dec \\ theta_inc  " + "  ".join(f"{t:>4}" for t in thetas))
for dec in thetas:
    counts = [len(scan(flows, registry, annex, SurveillanceParams(theta_dec=dec, theta_inc=inc))) for inc in thetas]
    print(f"{dec:>20}  " + "  ".join(f"{c:>4}" for c in counts))
