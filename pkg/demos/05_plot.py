"""
Drawing the virality curves
===========================

Render the CSV written by ``02_baseline_sweep.py`` as a standalone SVG.
The dashed line marks the 0.5 cascade threshold.
"""

from pathlib import Path

from infodisorder.plot import plot_virality

if not Path("baseline.csv").exists():
    raise SystemExit("run 02_baseline_sweep.py first")
out = plot_virality(["baseline.csv"], "baseline.svg", title="Average virality, no Super-Agent")
print("wrote", out)
