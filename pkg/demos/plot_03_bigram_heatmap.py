"""
Length 2-grams
==============

Counting adjacent packet-length pairs shows how the injected stream
changes the traffic seen by the display. The heatmap is printed as text;
``BigramHistogram.to_csv`` writes it for any plotting tool.
"""

import numpy as np

from cia_ids import camera, switch
from cia_ids.features import bigram_histogram

benign = camera.generate_stream(camera.default_spec(30.0, seed=5))
mixed = switch.apply_interference(
    camera.generate_stream(camera.default_spec(30.0, seed=6)), switch.default_plan(0, 30), 7)

hb = bigram_histogram(benign, camera.FRONT_DISPLAY)
hm = bigram_histogram(mixed, camera.FRONT_DISPLAY)
print(f"distinct 2-grams: benign {len(hb.keys())}, interfered {len(hm.keys())}")
print("benign keys all present under interference:", hb.keys() <= hm.keys())

# the pairs that only appear once the streams mix
new = sorted(hm.keys() - hb.keys(), key=lambda k: -hm[k])[:8]
for a, b in new:
    print(f"  ({a:4d}, {b:4d})  x{hm[(a, b)]}")

# coarse text heatmap on 200-byte bins
bins = np.arange(0, 1601, 200)
def coarse(h):
    rows, cols, m = h.matrix()
    out = np.zeros((len(bins) - 1, len(bins) - 1))
    ri = np.digitize(rows, bins) - 1
    ci = np.digitize(cols, bins) - 1
    np.add.at(out, (ri[:, None], ci[None, :]), m)
    return out / out.sum()

for name, h in (("benign", hb), ("interfered", hm)):
    print(f"\n{name} (rows: first length bin, cols: second)")
    for row in coarse(h):
        print("  " + " ".join(f"{v:5.3f}" for v in row))
