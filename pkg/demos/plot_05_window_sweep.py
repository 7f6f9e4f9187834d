"""
Window-size sweep
=================

Retrains the detector for each window size and prints the resulting table.
Sizes and data volume are trimmed so the demo finishes in about a minute;
the full list is ``experiment.DEFAULT_SWEEP``.
"""

from cia_ids import camera, switch
from cia_ids.experiment import SWEEP_HEADER, ExperimentConfig, run_experiment
from cia_ids.gru import TrainConfig

benign = camera.generate_stream(camera.default_spec(40.0, seed=12))
attack = switch.apply_interference(
    camera.generate_stream(camera.default_spec(40.0, seed=13)), switch.default_plan(0, 40), 14)

cfg = ExperimentConfig(windows=(3, 23, 63, 123, 255), train=TrainConfig(epochs=8, lr=5e-3, hidden=16),
                       max_windows=4000)
result = run_experiment(cfg, [benign, attack])

print(SWEEP_HEADER)
for row in result.rows():
    print(row)
