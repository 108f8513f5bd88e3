"""One randomized trial of the sinusoid tracking problem.

Prints the cardinality of the l2 and l1-l2 designs and the time-averaged
tracking error of each design.  Run from the repository root:

    python demos/single_trial.py [seed]
"""

import sys

import numpy as np

from csremote import load_config, run_single

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
cfg = load_config("configs/paper.json", "sinusoid")
rec = run_single(cfg, seed)

print(f"N = {cfg.space().N}, K = {cfg.K}, effective mu1 = {cfg.effective_weights()[0]:.4g}")
print(f"card l2 = {rec.card_l2}, card l1-l2 = {rec.card_l1l2}, FISTA iterations = {rec.iterations}")
for name in ("l2", "l1l2", "trunc"):
    print(f"{name:>6}: mean |r - y| = {np.mean(np.abs(rec.err[name])):.4e}")
