"""Repetition orchestration, artifacts and the key=value run manifest."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

from .. import __version__
from ..errors import ConfigError, InvalidOverride, StealthError
from ..metrics import MetricsReport
from ..simkit import engine
from ..simkit.eventlog import FORMATS, EventLog
from ..simkit.mobility import generate_synthetic
from ..simkit.trace import MobilityTrace, load_trace
from .scenario import ScenarioConfig, build_scenario

log = logging.getLogger(__name__)

SYNTHETIC = "synthetic"
RENDEZVOUS_OFFSET = 8.0  # m, spacing of the MEACK group around the area centre

# manifest / config-file keys mapped onto ScenarioConfig fields
_FIELD_KEYS = {
    "reps": "repetitions", "nodes": "n_nodes", "duration": "duration",
    "emergency_time": "emergency_time", "announce_interval": "announce_interval",
    "ack_timeout": "ack_timeout", "ack_batch_window": "ack_batch_window", "seed": "seed",
    "warmup": "warmup", "snapshot_interval": "snapshot_interval", "log_level": "log_level",
    "skill_assignment": "skill_assignment", "radius": "radius", "base_latency": "base_latency",
    "bitrate": "bitrate", "jitter_bound": "jitter_bound",
}
_INT_KEYS = {"reps", "nodes", "seed"}
_STR_KEYS = {"log_level", "skill_assignment"}
_RUN_KEYS = {"scenario", "trace", "trace_seed", "format", "workers"}
_INFO_KEYS = {"version", "seeds", "invalid_reps", "health_policy"}
CONFIG_KEYS = set(_FIELD_KEYS) | _RUN_KEYS | _INFO_KEYS | {
    "focal_nodes", "receiver", "priorities", "area", "speed_min", "speed_max"}


@dataclass
class RunSpec:
    """Everything needed to reproduce an experiment."""

    config: ScenarioConfig
    trace: str = SYNTHETIC  # "synthetic" or a CSV path
    trace_seed: Optional[int] = None
    log_format: str = "csv"

    @property
    def effective_trace_seed(self) -> int:
        return self.config.seed if self.trace_seed is None else self.trace_seed


# -- config text -----------------------------------------------------------


def parse_config_text(text: str) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment, hyphens in keys read as underscores."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidOverride(f"config line {n}: expected key=value, got {raw!r}")
        key = key.strip().replace("-", "_")
        if key not in CONFIG_KEYS:
            raise InvalidOverride(f"config line {n}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _ids(value: str) -> tuple:
    return tuple(int(x) for x in value.replace(",", "|").split("|") if x.strip())


def spec_from_mapping(values: Mapping[str, object]) -> RunSpec:
    """Build a :class:`RunSpec` from string-or-typed values keyed like the config file."""
    v = {k.replace("-", "_"): val for k, val in values.items() if val is not None}
    unknown = set(v) - CONFIG_KEYS
    if unknown:
        raise InvalidOverride(f"unknown key(s): {sorted(unknown)}")
    over: dict = {}
    try:
        for key, fname in _FIELD_KEYS.items():
            if key in v:
                raw = v[key]
                over[fname] = (str(raw) if key in _STR_KEYS else int(raw) if key in _INT_KEYS else float(raw))
        if "focal_nodes" in v:
            over["focal_nodes"] = v["focal_nodes"] if isinstance(v["focal_nodes"], tuple) else _ids(str(v["focal_nodes"]))
        if "receiver" in v:
            r = str(v["receiver"]).strip()
            over["receiver"] = None if r in ("", "none") else int(r)
        if "priorities" in v:
            p = v["priorities"]
            if not isinstance(p, Mapping):
                p = {int(a): int(b) for a, b in (item.split(":") for item in str(p).split("|") if item)} or None
            over["priorities"] = p
        if "area" in v:
            w, h = str(v["area"]).lower().split("x")
            over["area"] = (float(w), float(h))
        if "speed_min" in v or "speed_max" in v:
            lo = float(v.get("speed_min", 0.5))
            hi = float(v.get("speed_max", 2.0))
            over["speed_range"] = (lo, hi)
        trace_seed = int(v["trace_seed"]) if "trace_seed" in v and str(v["trace_seed"]) != "" else None
    except (TypeError, ValueError) as exc:
        raise InvalidOverride(str(exc)) from exc
    cfg = build_scenario(str(v.get("scenario", "senack")), over)
    fmt = str(v.get("format", "csv"))
    if fmt not in FORMATS:
        raise InvalidOverride(f"format must be one of {FORMATS}")
    return RunSpec(cfg, str(v.get("trace", SYNTHETIC)), trace_seed, fmt)


def manifest_text(spec: RunSpec, invalid: Mapping[int, str] = None) -> str:
    cfg = spec.config
    rows = [
        ("version", __version__),
        ("scenario", cfg.name),
        ("trace", spec.trace),
        ("trace_seed", spec.effective_trace_seed),
        ("seed", cfg.seed),
        ("reps", cfg.repetitions),
        ("seeds", "|".join(str(cfg.seed + i) for i in range(cfg.repetitions))),
        ("nodes", cfg.n_nodes),
        ("duration", float(cfg.duration)),
        ("warmup", float(cfg.warmup)),
        ("snapshot_interval", float(cfg.snapshot_interval)),
        ("area", f"{float(cfg.area[0])}x{float(cfg.area[1])}"),
        ("speed_min", float(cfg.speed_range[0])),
        ("speed_max", float(cfg.speed_range[1])),
        ("emergency_time", float(cfg.emergency_time)),
        ("focal_nodes", "|".join(map(str, cfg.focal_nodes))),
        ("receiver", "" if cfg.receiver is None else cfg.receiver),
        ("priorities", "|".join(f"{k}:{p}" for k, p in sorted((cfg.priorities or {}).items()))),
        ("announce_interval", float(cfg.announce_interval)),
        ("ack_timeout", float(cfg.ack_timeout)),
        ("ack_batch_window", float(cfg.ack_batch_window)),
        ("radius", float(cfg.radio.radius)),
        ("base_latency", float(cfg.radio.base_latency)),
        ("bitrate", float(cfg.radio.bitrate)),
        ("jitter_bound", float(cfg.radio.jitter_bound)),
        ("skill_assignment", cfg.skill_assignment),
        ("log_level", cfg.log_level),
        ("format", spec.log_format),
        ("health_policy", "fixed_profiles_count_toward_target"),
        ("invalid_reps", "|".join(f"{i}" for i in sorted(invalid or {}))),
    ]
    return "".join(f"{k}={v}\n" for k, v in rows)


def load_manifest(path) -> RunSpec:
    return spec_from_mapping(parse_config_text(Path(path).read_text(encoding="utf-8")))


# -- traces ------------------------------------------------------------------


def meack_rendezvous(config: ScenarioConfig) -> dict:
    """Receiver at the area centre, focal nodes a few metres around it, at the emergency time."""
    cx, cy = config.area[0] / 2, config.area[1] / 2
    d = RENDEZVOUS_OFFSET
    offsets = [(d, 0.0), (-d, 0.0), (0.0, d), (0.0, -d), (d, d), (-d, -d)]
    out = {}
    if config.receiver is not None:
        out[config.receiver] = (config.emergency_time, (cx, cy))
    for nid, (ox, oy) in zip(config.focal_nodes, offsets * (len(config.focal_nodes) // len(offsets) + 1)):
        out[nid] = (config.emergency_time, (cx + ox, cy + oy))
    return out


def resolve_trace(config: ScenarioConfig, source: Union[str, Path, MobilityTrace, None] = SYNTHETIC,
                  trace_seed: Optional[int] = None) -> MobilityTrace:
    if isinstance(source, MobilityTrace):
        return source
    if source is None or str(source) == SYNTHETIC:
        rdv = meack_rendezvous(config) if config.receiver is not None else None
        return generate_synthetic(config.n_nodes, config.area, config.speed_range, config.duration,
                                  config.snapshot_interval,
                                  seed=config.seed if trace_seed is None else trace_seed, rendezvous=rdv)
    return load_trace(source)


# -- repetitions -------------------------------------------------------------

_WORKER: dict = {}


def _init_worker(config, trace):
    _WORKER["config"] = config
    _WORKER["trace"] = trace


def _run_rep(i: int):
    cfg = _WORKER["config"]
    try:
        return i, engine.run(cfg, _WORKER["trace"], cfg.seed + i), None
    except StealthError as exc:
        return i, None, f"{type(exc).__name__}: {exc}"


@dataclass
class ExperimentResult:
    report: Optional[MetricsReport]
    logs: list  # EventLog per repetition, None where the repetition failed
    invalid: dict = field(default_factory=dict)  # rep index -> error text
    manifest: str = ""

    @property
    def valid_logs(self) -> list:
        return [lg for lg in self.logs if lg is not None]


def run_experiment(config: ScenarioConfig, trace_source=SYNTHETIC, out_dir=None, workers: int = 1,
                   trace_seed: Optional[int] = None, log_format: str = "csv") -> ExperimentResult:
    """Run ``config.repetitions`` seeded repetitions (seed ``config.seed + i``) and aggregate."""
    config.validate()
    trace = resolve_trace(config, trace_source, trace_seed)
    n = config.repetitions
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "logs").mkdir(parents=True, exist_ok=True)
        for stale in (out / "logs").glob("rep_*.log"):  # a rerun must not mix with older repetitions
            stale.unlink()

    logs: list = [None] * n
    invalid: dict = {}

    def collect(i, lg, err):
        if err is not None:
            invalid[i] = err
            log.warning("repetition %d invalid: %s", i, err)
        else:
            logs[i] = lg
            if out is not None:
                lg.write(out / "logs" / f"rep_{i}.log", log_format)

    workers = max(1, min(int(workers), n))
    if workers == 1:
        _init_worker(config, trace)
        trace.adjacency(config.radio.radius)
        for i in range(n):
            collect(*_run_rep(i))
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(config, trace)) as pool:
            for res in pool.map(_run_rep, range(n)):
                collect(*res)

    valid = [lg for lg in logs if lg is not None]
    if not valid:
        raise ConfigError(f"all {n} repetitions failed; first error: {invalid[min(invalid)]}")
    report = MetricsReport.from_logs(valid)
    src = trace_source if isinstance(trace_source, (str, os.PathLike)) or trace_source is None else "<in-memory>"
    spec = RunSpec(config, str(src if src is not None else SYNTHETIC), trace_seed, log_format)
    manifest = manifest_text(spec, invalid)
    if out is not None:
        write_report(report, out)
        (out / "manifest.txt").write_text(manifest, encoding="utf-8")
    return ExperimentResult(report, logs, invalid, manifest)


def write_report(report: MetricsReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out / "report.jsonl").write_text(report.to_jsonl(), encoding="utf-8")
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")


def read_logs(log_dir) -> list[EventLog]:
    """``rep_<i>.log`` files of a run directory, in repetition order."""
    d = Path(log_dir)
    if (d / "logs").is_dir():
        d = d / "logs"
    files = sorted(d.glob("rep_*.log"), key=lambda p: int(p.stem.split("_")[1]))
    return [EventLog.read(p) for p in files]

