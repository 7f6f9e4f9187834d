"""Camera-interference traffic synthesis and a GRU packet-length detector."""

from .camera import (CameraProfile, StreamSpec, derive_default_profile, derive_left_profile,
                     generate_stream)
from .capture import CaptureMeta, CaptureSet
from .capture_io import export_pcap, read_csv, write_csv
from .features import WindowMatrix, bigram_histogram, make_windows, normalize
from .gru import (GruParams, TrainConfig, forward, init_params, load_model, loss_and_gradients,
                  predict, save_model, train)
from .metrics import EvalReport, evaluate
from .experiment import DEFAULT_SWEEP, ExperimentConfig, run_experiment, split
from .packet import MacAddr, Packet, PayloadUnit, fragment_unit, packetize, reassemble
from .switch import AttackPlan, ForwardingTable, apply_interference, learn, poison

__version__ = "0.1.0"
