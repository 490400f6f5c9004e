"""Flat key-value run configuration shared by all CLI commands.

One `key = value` pair per line, `#` comments allowed.  Relative paths are
resolved against the directory containing the config file, so a run is fully
described by a single artifact.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .embedding import DEFAULT_HASH_SEED
from .fusion import DEFAULT_GRID, DEFAULT_THRESHOLD

_KNOWN_KEYS = {
    "corpus",
    "api_db",
    "labels",
    "out",
    "provider",
    "seed",
    "hash_seed",
    "epochs",
    "learning_rate",
    "batch_size",
    "hidden_width",
    "optimizer",
    "x",
    "t",
    "grid",
}


@dataclass(frozen=True)
class RunConfig:
    corpus_path: Path
    api_db_path: Path
    output_dir: Path
    labels_path: Path | None = None
    provider: str = "hash"
    seed: int = 0
    hash_seed: int = DEFAULT_HASH_SEED
    epochs: int = 6
    learning_rate: float = 1e-3
    batch_size: int = 64
    hidden_width: int = 128
    optimizer: str = "adam"
    x: float | None = None
    t: float = DEFAULT_THRESHOLD
    grid: tuple[float, ...] = DEFAULT_GRID


def parse_config_text(text: str, base_dir: Path) -> RunConfig:
    raw: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {line_no}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KNOWN_KEYS:
            raise ValueError(f"config line {line_no}: unknown key {key!r}")
        raw[key] = value

    for required in ("corpus", "api_db", "out"):
        if required not in raw:
            raise ValueError(f"config is missing required key {required!r}")

    def path_of(key: str) -> Path:
        p = Path(raw[key])
        return p if p.is_absolute() else base_dir / p

    return RunConfig(
        corpus_path=path_of("corpus"),
        api_db_path=path_of("api_db"),
        output_dir=path_of("out"),
        labels_path=path_of("labels") if "labels" in raw else None,
        provider=raw.get("provider", "hash"),
        seed=int(raw.get("seed", "0")),
        hash_seed=int(raw.get("hash_seed", str(DEFAULT_HASH_SEED))),
        epochs=int(raw.get("epochs", "6")),
        learning_rate=float(raw.get("learning_rate", "1e-3")),
        batch_size=int(raw.get("batch_size", "64")),
        hidden_width=int(raw.get("hidden_width", "128")),
        optimizer=raw.get("optimizer", "adam"),
        x=float(raw["x"]) if "x" in raw else None,
        t=float(raw.get("t", str(DEFAULT_THRESHOLD))),
        grid=tuple(float(v) for v in raw["grid"].split(",")) if "grid" in raw else DEFAULT_GRID,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), path.parent.resolve())


def config_text(cfg: RunConfig) -> str:
    lines = [
        f"corpus = {cfg.corpus_path}",
        f"api_db = {cfg.api_db_path}",
    ]
    if cfg.labels_path is not None:
        lines.append(f"labels = {cfg.labels_path}")
    lines += [
        f"out = {cfg.output_dir}",
        f"provider = {cfg.provider}",
        f"seed = {cfg.seed}",
        f"hash_seed = {cfg.hash_seed}",
        f"epochs = {cfg.epochs}",
        f"learning_rate = {cfg.learning_rate!r}",
        f"batch_size = {cfg.batch_size}",
        f"hidden_width = {cfg.hidden_width}",
        f"optimizer = {cfg.optimizer}",
    ]
    if cfg.x is not None:
        lines.append(f"x = {cfg.x!r}")
    lines.append(f"t = {cfg.t!r}")
    lines.append("grid = " + ",".join(repr(v) for v in cfg.grid))
    return "\n".join(lines) + "\n"


def write_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(config_text(cfg), encoding="utf-8")


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Replace config fields with any non-None command-line overrides."""
    effective = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **effective) if effective else cfg
