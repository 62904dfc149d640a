"""Certify the comparison barriers numerically and show the certificates.

Three barrier families underpin the dichotomy analysis:
  - a supersolution 2 s^(1-2/n) + c2 s^(1-4/n) e^(lambda t) dominating early
    growth from above,
  - an oscillating subsolution (n <= 9) riding the Bernoulli amplitude y(t),
    which pushes solutions away from w* from below,
  - an upper barrier 2s / (s^(2/n) + b(t)) whose logistic-type gap b(t)
    closes toward 2B, trapping absorbed solutions.

verify_barriers evaluates each residual on a fine grid and reports signed
worst cases; run this for any n >= 3.
"""

import json
import tempfile
from pathlib import Path

from kslab.experiments import verify_barriers

for n in (5, 10):
    with tempfile.TemporaryDirectory() as tmp:
        report = verify_barriers(n, Path(tmp))
    print(f"--- n = {n} ---")
    print(json.dumps(report, indent=2, sort_keys=True))
    print()

print("Residual sign conventions: supersolution residual must be >= 0 "
      "(drains), subsolution residual <= 0 (fills), upper-barrier ordering "
      "margin >= 0.  'all_ok' aggregates every check; the oscillating "
      "subsolution only exists for n <= 9, so its keys are absent at n = 10.")
