"""Run configuration: TOML file + profile defaults + overrides.

The "paper" profile preserves the full-scale hyperparameters (1200-dim
bidirectional GRUs over 300-dim word vectors, one epoch); the "desk" profile
is small enough for laptops and CI and drives all tests.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import InvalidValue, MissingPath, UnknownKey

SYNTH_TASKS = ("sp", "bso", "dc", "dc-threads", "ssp", "pdtb-e", "pdtb-i", "rst")
LOSS_NAMES = ("nsp", "nl", "spp", "sdt")
RST_LABEL_MODES = ("relation", "nuclearity_relation")

PROFILES = {
    "desk": {"hidden_dim": 32, "word_dim": 32, "batch_size": 64, "seed": 13},
    "paper": {"hidden_dim": 1200, "word_dim": 300, "batch_size": 64, "seed": 13},
}

KNOWN_KEYS = (
    "corpus_path",
    "vectors_path",
    "out_dir",
    "profile",
    "seed",
    "losses",
    "loss_weights",
    "hidden_dim",
    "word_dim",
    "batch_size",
    "spp_caps",
    "tasks",
    "probe_l2_grid",
    "rst_label_mode",
    "dc_candidate_pool",
    "counts",
)


@dataclass
class RunConfig:
    corpus_path: Path | None = None
    vectors_path: Path | None = None
    out_dir: Path = Path("out")
    profile: str = "desk"
    seed: int = 13
    losses: tuple[str, ...] = ("nsp",)
    loss_weights: dict[str, float] = field(default_factory=dict)
    hidden_dim: int = 32
    word_dim: int = 32
    batch_size: int = 64
    spp_caps: tuple[int, int] = (32, 64)
    tasks: tuple[str, ...] = ("sp", "bso", "dc", "ssp")
    probe_l2_grid: tuple[float, ...] = (0.0, 1e-4, 1e-3, 1e-2)
    rst_label_mode: str = "nuclearity_relation"
    dc_candidate_pool: int = 1000
    counts: tuple[int, int, int] = (10000, 4000, 4000)

    def echo(self) -> str:
        """Every resolved value actually used, printable for auditable runs."""
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)!r}")
        return "\n".join(lines)


def _require(condition: bool, key: str, reason: str) -> None:
    if not condition:
        raise InvalidValue(key, reason)


def _as_int(key: str, value) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool), key, "expected an integer")
    return value


def _validate(cfg: RunConfig) -> RunConfig:
    _require(cfg.profile in PROFILES, "profile", f"expected one of {sorted(PROFILES)}")
    _require(cfg.hidden_dim >= 1, "hidden_dim", "must be >= 1")
    _require(cfg.word_dim >= 1, "word_dim", "must be >= 1")
    _require(cfg.batch_size >= 1, "batch_size", "must be >= 1")
    _require(len(cfg.spp_caps) == 2 and all(c >= 1 for c in cfg.spp_caps), "spp_caps", "expected two positive ints")
    _require(len(cfg.counts) == 3 and all(c >= 1 for c in cfg.counts), "counts", "expected three positive ints")
    unknown_losses = set(cfg.losses) - set(LOSS_NAMES)
    _require(not unknown_losses, "losses", f"unknown losses {sorted(unknown_losses)}")
    _require("nsp" in cfg.losses, "losses", "nsp is always enabled")
    unknown_tasks = set(cfg.tasks) - set(SYNTH_TASKS)
    _require(not unknown_tasks, "tasks", f"unknown tasks {sorted(unknown_tasks)}")
    _require(cfg.rst_label_mode in RST_LABEL_MODES, "rst_label_mode", f"expected one of {RST_LABEL_MODES}")
    _require(cfg.dc_candidate_pool >= 1, "dc_candidate_pool", "must be >= 1")
    _require(all(w >= 0 for w in cfg.loss_weights.values()), "loss_weights", "weights must be >= 0")
    _require(all(l2 >= 0 for l2 in cfg.probe_l2_grid), "probe_l2_grid", "values must be >= 0")
    for key in ("corpus_path", "vectors_path"):
        path = getattr(cfg, key)
        if path is not None and not Path(path).exists():
            raise MissingPath(path)
    return cfg


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults < profile < file < overrides < DISCO_SEED, then validate."""
    file_data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as handle:
                file_data = tomllib.load(handle)
        except OSError as exc:
            raise MissingPath(path) from None
        except tomllib.TOMLDecodeError as exc:
            raise InvalidValue(str(path), f"not valid TOML: {exc}") from None
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}

    for source in (file_data, overrides):
        for key in source:
            if key not in KNOWN_KEYS:
                raise UnknownKey(key)

    merged: dict = {}
    profile = overrides.get("profile", file_data.get("profile", "desk"))
    if profile not in PROFILES:
        raise InvalidValue("profile", f"expected one of {sorted(PROFILES)}")
    merged["profile"] = profile
    merged.update(PROFILES[profile])
    for source in (file_data, overrides):
        for key, value in source.items():
            merged[key] = value

    env_seed = os.environ.get("DISCO_SEED")
    if env_seed is not None:
        try:
            merged["seed"] = int(env_seed)
        except ValueError:
            raise InvalidValue("seed", f"DISCO_SEED={env_seed!r} is not an integer") from None

    cfg = RunConfig()
    for key, value in merged.items():
        if key in ("corpus_path", "vectors_path"):
            value = Path(value) if value is not None else None
        elif key == "out_dir":
            value = Path(value)
        elif key in ("seed", "hidden_dim", "word_dim", "batch_size", "dc_candidate_pool"):
            value = _as_int(key, value)
        elif key in ("losses", "tasks"):
            _require(isinstance(value, (list, tuple)) and all(isinstance(v, str) for v in value), key, "expected a list of strings")
            value = tuple(value)
        elif key == "loss_weights":
            _require(isinstance(value, dict), key, "expected a table of loss -> weight")
            bad = set(value) - set(LOSS_NAMES)
            _require(not bad, key, f"unknown losses {sorted(bad)}")
            value = {k: float(v) for k, v in value.items()}
        elif key in ("spp_caps", "counts"):
            _require(isinstance(value, (list, tuple)), key, "expected a list of integers")
            value = tuple(_as_int(key, v) for v in value)
        elif key == "probe_l2_grid":
            _require(isinstance(value, (list, tuple)), key, "expected a list of numbers")
            value = tuple(float(v) for v in value)
        elif key in ("profile", "rst_label_mode"):
            _require(isinstance(value, str), key, "expected a string")
        setattr(cfg, key, value)
    return _validate(cfg)
