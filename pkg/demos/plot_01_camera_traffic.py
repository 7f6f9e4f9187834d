"""
Synthetic camera traffic
========================

One front camera, one display. Frames are sliced, each slice is split into
FU-A fragments and every fragment becomes one UDP packet.
"""

import numpy as np

from cia_ids import camera, packet

# a single 3000-byte coded unit with a 1400-byte body limit
unit = packet.PayloadUnit(5, bytes(3000))
frags = packet.fragment_unit(unit, 1400)
print("fragment bodies:", [len(f.body) for f in frags])
print("start/end bits :", [(f.start, f.end) for f in frags])
assert packet.reassemble(frags) == unit

# turn them into packets; the counter wraps at 256
pkts = packet.packetize(frags, camera.FRONT_CAMERA, camera.FRONT_DISPLAY, "front", start_seq=254)
print("seq numbers    :", [p.seq for p in pkts])
print("wire lengths   :", [p.length for p in pkts])

# ten seconds of the calibrated default camera
cap = camera.generate_stream(camera.default_spec(10.0, seed=1))
print(f"\n{len(cap)} packets, {len(cap) / 10:.1f} pkt/s, mean length {cap.length.mean():.1f} B")
print(f"calibration target {camera.TARGET_RATE:.1f} pkt/s, {camera.TARGET_MEAN_LENGTH:.1f} B")

# most packets are full fragments; the rest are slice tails
values, counts = np.unique(cap.length, return_counts=True)
top = np.argsort(counts)[::-1][:5]
for v, c in zip(values[top], counts[top]):
    print(f"  {v:5d} B  {c / len(cap):6.2%}")
