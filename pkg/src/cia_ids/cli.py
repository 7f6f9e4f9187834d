"""Command-line pipeline: generate | attack | featurize | train | eval | sweep.

Configuration is a flat ``key = value`` file (``#`` starts a comment);
any key can be overridden on the command line as ``--key value``.
Exit codes: 0 success, 2 missing input file, 3 invalid configuration or data.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

from . import capture_io
from .camera import (FRONT_DISPLAY, StreamSpec, derive_default_profile, derive_left_profile,
                     generate_stream)
from .capture import CaptureSet
from .errors import CiaError, ConfigError
from .experiment import DEFAULT_SWEEP, ExperimentConfig, run_experiment, split
from .features import bigram_histogram, make_windows, normalize
from .gru import TrainConfig, init_params, load_model, predict, save_model, train
from .metrics import evaluate
from .switch import ATTACKER_PORT, AttackPlan, apply_interference, seq_discontinuities

log = logging.getLogger("cia_ids")


@dataclass
class RunConfig:
    seed: int = 0
    duration_s: float = 120.0
    benign_path: str = "captures/benign.csv"
    attack_path: str = "captures/attack.csv"
    attack_base_path: str = ""          # empty: generate a fresh drive for the attack
    model_path: str = "models/gru.txt"
    report_dir: str = "reports"
    attack_start_s: float = 0.0
    attack_end_s: float = -1.0          # negative: end of capture
    attacker_port: int = ATTACKER_PORT
    window: int = 255
    stride: int = 0                     # 0: same as window
    hidden: int = 32
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 10
    clip: float = 5.0
    optimizer: str = "adam"
    train_fraction: float = 0.8
    threshold: float = 0.5
    sweep: str = ",".join(map(str, DEFAULT_SWEEP))
    max_windows: int = 0                # 0: no cap

    def train_config(self) -> TrainConfig:
        return TrainConfig(lr=self.lr, batch_size=self.batch_size, epochs=self.epochs,
                           hidden=self.hidden, clip=self.clip if self.clip > 0 else None,
                           seed=self.seed, optimizer=self.optimizer)

    def sweep_sizes(self) -> list[int]:
        try:
            return [int(s) for s in self.sweep.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"sweep must be a comma-separated list of ints, got {self.sweep!r}")


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown configuration key {key!r}")
    kind = type(_FIELDS[key].default)
    try:
        return kind(raw) if kind is not str else raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        values[key] = _coerce(key, raw)
    return values


def parse_overrides(extra: list[str]) -> dict:
    values = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        if "=" in tok:
            key, raw = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"{tok} needs a value")
            key, raw = tok[2:], extra[i + 1]
            i += 2
        key = key.replace("-", "_")
        values[key] = _coerce(key, raw)
    return values


def load_config(path: str | None, overrides: dict) -> RunConfig:
    values = {}
    if path:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(2, "config file not found", str(p))
        values.update(parse_config_text(p.read_text(encoding="utf-8")))
    values.update(overrides)
    cfg = RunConfig(**values)
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg


def _need(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(2, "required file not found", str(p))
    return p


def _out(path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _captures(cfg: RunConfig) -> list[CaptureSet]:
    return [capture_io.read_csv(_need(cfg.benign_path)),
            capture_io.read_csv(_need(cfg.attack_path))]


def _windows(cfg: RunConfig, captures):
    wm = make_windows(captures, cfg.window, cfg.stride or None)
    return split(wm, cfg.train_fraction, cfg.seed)


def cmd_generate(cfg: RunConfig) -> int:
    spec = StreamSpec(cfg.duration_s, (derive_default_profile(),), cfg.seed)
    cap = generate_stream(spec)
    capture_io.write_csv(cap, _out(cfg.benign_path))
    print(f"wrote {len(cap)} packets ({cap.total_bytes} bytes) to {cfg.benign_path}")
    return 0


def cmd_attack(cfg: RunConfig) -> int:
    if cfg.attack_base_path:
        base = capture_io.read_csv(_need(cfg.attack_base_path))
    else:
        base = generate_stream(StreamSpec(cfg.duration_s, (derive_default_profile(),),
                                          cfg.seed + 1))
    end = cfg.attack_end_s if cfg.attack_end_s >= 0 else base.duration_s
    plan = AttackPlan(FRONT_DISPLAY, cfg.attacker_port, derive_left_profile(),
                      cfg.attack_start_s, end)
    cap = apply_interference(base, plan, cfg.seed + 2)
    capture_io.write_csv(cap, _out(cfg.attack_path))
    print(f"wrote {len(cap)} packets to {cfg.attack_path} "
          f"({seq_discontinuities(cap, FRONT_DISPLAY)} sequence breaks at the display)")
    return 0


def cmd_featurize(cfg: RunConfig) -> int:
    report_dir = Path(cfg.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    for cap in _captures(cfg):
        hist = bigram_histogram(cap, FRONT_DISPLAY)
        path = report_dir / f"bigrams_{cap.meta.label_class}.csv"
        hist.to_csv(path)
        print(f"{cap.meta.label_class}: {len(hist.keys())} distinct 2-grams "
              f"over {hist.total} pairs -> {path}")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    tr, _ = _windows(cfg, _captures(cfg))
    tr = normalize(tr)
    hyper = cfg.train_config()
    params, history = train(init_params(hyper.hidden, hyper.seed), tr, hyper,
                            log=lambda r: log.info("epoch %(epoch)d loss %(loss).5f", r))
    save_model(params, _out(cfg.model_path))
    hist_path = _out(Path(cfg.report_dir) / "history.csv")
    with open(hist_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,loss\n")
        fh.writelines(f"{r['epoch']},{r['loss']!r}\n" for r in history)
    print(f"trained on {len(tr)} windows; model -> {cfg.model_path}")
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    params = load_model(_need(cfg.model_path))
    if params.bounds is None:
        raise ConfigError(f"{cfg.model_path} carries no normalization bounds")
    window = params.window or cfg.window
    cfg.window = window
    _, te = _windows(cfg, _captures(cfg))
    te = normalize(te, params.bounds)
    t0 = time.perf_counter()
    scores = predict(params, te.data)
    per_window = (time.perf_counter() - t0) / max(len(te), 1)
    report = evaluate(scores, te.truth(), cfg.threshold)
    report.inference_time_per_window = per_window
    d = Path(cfg.report_dir)
    d.mkdir(parents=True, exist_ok=True)
    report.to_json(d / "report.json")
    report.roc_csv(d / "roc.csv")
    print(f"test windows {report.total}: accuracy {report.accuracy:.5f} "
          f"auc {report.auc:.5f} tpr {report.tpr:.5f} fpr {report.fpr:.5f}")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    exp = ExperimentConfig(windows=cfg.sweep_sizes(), train=cfg.train_config(),
                           train_fraction=cfg.train_fraction, stride=cfg.stride or None,
                           max_windows=cfg.max_windows or None, threshold=cfg.threshold,
                           out_dir=cfg.report_dir)
    result = run_experiment(exp, _captures(cfg))
    print(f"{len(result.results)} window sizes -> {result.sweep_csv}")
    return 0


COMMANDS = {"generate": cmd_generate, "attack": cmd_attack, "featurize": cmd_featurize,
            "train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cia-ids", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int, help="64-bit RNG seed")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = parse_overrides(extra)
        if args.seed is not None:
            overrides["seed"] = args.seed
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 2
    except (CiaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
