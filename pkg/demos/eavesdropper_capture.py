"""
Eve on the line
===============

A tap copies every phase block Alice sends.  Eve applies her best guess to
each sample without knowing the basis; her hit rate should match 1 - P_e.
With only two bases there is no protection and she reads everything.
"""

import tempfile
from pathlib import Path

from otpb.experiments import ExperimentSpec, capture_eve

with tempfile.TemporaryDirectory() as tmp:
    for label, params in [
        ("M=1024, <n>=1000", {"n_mean": 1000, "M": 1024, "s": 1000, "rounds": 20}),
        ("M=2, <n>=1e6", {"n_mean": 1e6, "M": 2, "s": 1000, "rounds": 5}),
    ]:
        res = capture_eve(ExperimentSpec("eve-capture", params, Path(tmp) / "eve.csv", seed=4))
        rep = res.extra["report"]
        print(f"{label}: {rep.bits} bits, Eve right {rep.accuracy:.4f}, "
              f"expected {rep.expected:.4f} (z={rep.z:+.2f})")
