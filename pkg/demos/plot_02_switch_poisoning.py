"""
Forwarding-table poisoning
==========================

The attacker claims the front display's address on its own port. From then
on the left camera's packets are delivered to the front display next to
the genuine front stream.
"""

from cia_ids import camera, switch
from cia_ids.switch import ForwardingTable

table = ForwardingTable({camera.FRONT_DISPLAY: switch.DISPLAY_PORT,
                         camera.LEFT_DISPLAY: 12,
                         camera.FRONT_CAMERA: 1,
                         camera.LEFT_CAMERA: 2})
print("before:\n" + table.dump())

plan = switch.default_plan(2.0, 6.0)
poisoned = switch.poison(table, plan)
print("after:\n" + poisoned.dump())

# only the victim row moved, and poisoning twice changes nothing
assert [m for m in table if table[m] != poisoned[m]] == [camera.FRONT_DISPLAY]
assert switch.poison(poisoned, plan) == poisoned

# replay the effect on a benign drive
benign = camera.generate_stream(camera.default_spec(8.0, seed=3))
mixed = switch.apply_interference(benign, plan, rng_seed=4)
print(f"benign   : {len(benign)} packets, "
      f"{switch.seq_discontinuities(benign, camera.FRONT_DISPLAY)} sequence breaks")
print(f"interfered: {len(mixed)} packets, "
      f"{switch.seq_discontinuities(mixed, camera.FRONT_DISPLAY)} sequence breaks")
