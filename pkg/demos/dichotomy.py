"""The stability dichotomy in one run: same pipeline, two dimensions.

u*(x) = 2(n-2)/|x|^2 flips character at n = 10: attracting from below with
infinite-time grow-up for n >= 10, repelling into an absorbing set for
3 <= n <= 9.  This demo executes the two shipped showcase configurations
and prints the verdicts side by side.  Takes ~15 s.
"""

import tempfile
from pathlib import Path

from kslab.experiments import load_config, run_experiment

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

CASES = {
    "n = 10 (grow-up side)": "theo7_n10.cfg",
    "n = 5 (absorbing side)": "theo25_n5.cfg",
}

with tempfile.TemporaryDirectory() as tmp:
    for label, name in CASES.items():
        cfg = load_config(CONFIG_DIR / name)
        summary = run_experiment(cfg, Path(tmp) / name.removesuffix(".cfg"))
        growth = summary["sup_norm_growth_final_half"]
        print(f"{label}  [{name}]:")
        print(f"  verdict: {summary['verdict']}")
        print(f"  final sup-norm: {summary['sup_norm_final']:.4f}")
        if growth is not None:
            print(f"  sup growth over final half: {growth:.2f}x")
        if summary["verdict"] == "bounded":
            print(f"  absorbing entry: t = {summary['absorbing_entry']}")
            print(f"  repulsion gap, final quarter min: "
                  f"{summary['gap_min_final_quarter']:.4f}")
        print(f"  invariants all pass: {summary['all_invariants_pass']}")
        print()

print("Dichotomy at desk scale: the n = 10 run trends upward with no "
      "plateau; the n = 5 run enters its absorbing set and stays there "
      "with a positive repulsion gap.")
