"""Run both bundled scenarios end to end and render the figures.

Equivalent to:
    reachsep run <scenario> --out demo_output/<name> --plots --verify-mc 2000

Run with:  python demos/04_full_scenarios.py
"""

from pathlib import Path

from reachsep.pipeline import run
from reachsep.scenario import builtin_scenario_path

out_root = Path("demo_output")
for name in ["quadrotor_pair", "fixedwing_pair"]:
    out = out_root / name
    print(f"=== {name} -> {out}")
    code = run(builtin_scenario_path(name), out,
               {"plots": True, "verify_mc": 2000, "seed": 0})
    print(f"exit code {code}\n")
    for artifact in sorted(out.iterdir()):
        print(f"  {artifact.name}")
    print()
