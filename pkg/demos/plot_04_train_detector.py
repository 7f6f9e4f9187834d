"""
Training the GRU detector
=========================

Windows of W consecutive packet lengths are min-max scaled and scored by a
single-layer GRU. A shorter drive and a small window keep this quick.
"""

from cia_ids import camera, switch
from cia_ids.experiment import split
from cia_ids.features import make_windows, normalize
from cia_ids.gru import TrainConfig, init_params, predict, train
from cia_ids.metrics import evaluate

benign = camera.generate_stream(camera.default_spec(20.0, seed=8))
attack = switch.apply_interference(
    camera.generate_stream(camera.default_spec(20.0, seed=9)), switch.default_plan(0, 20), 10)

W = 63
windows = make_windows([benign, attack], W)
train_set, test_set = split(windows, 0.8, seed=0)
train_set = normalize(train_set)
test_set = normalize(test_set, train_set.bounds)
print(f"{len(train_set)} training windows, {len(test_set)} test windows")

# few windows means few updates per epoch, so the step size is raised
hyper = TrainConfig(epochs=10, lr=5e-3, hidden=16)
params, history = train(init_params(hyper.hidden, hyper.seed), train_set, hyper,
                        validation=test_set)
for rec in history:
    print(f"epoch {rec['epoch']}: loss {rec['loss']:.4f}  val auc {rec['val_auc']:.4f}")

report = evaluate(predict(params, test_set.data), test_set.truth())
print(f"\naccuracy {report.accuracy:.4f}  tpr {report.tpr:.4f}  fpr {report.fpr:.4f}  "
      f"auc {report.auc:.4f}")
