"""Runtime configuration: defaults < config file < environment < flags."""

import os
from dataclasses import dataclass, field, fields

ENV_PREFIX = "FIXITY_"


@dataclass
class Config:
    server_base: str = "http://127.0.0.1:9000"
    endpoints: list = field(default_factory=list)   # archive base URLs
    block_size: int = 100
    storage_dir: str = "./fixity-data"
    delay: float = 1.0

    def __post_init__(self):
        if self.block_size < 1:
            raise ValueError("block_size must be at least 1")


_ENV_KEYS = {
    "SERVER": "server_base",
    "ENDPOINTS": "endpoints",
    "BLOCK_SIZE": "block_size",
    "STORAGE": "storage_dir",
    "DELAY": "delay",
}


def _coerce(name: str, value):
    if name == "endpoints" and isinstance(value, str):
        return [e.strip() for e in value.split(",") if e.strip()]
    if name == "block_size":
        return int(value)
    if name == "delay":
        return float(value)
    return value


def read_config_file(path: str) -> dict:
    """key = value lines; # starts a comment; unknown keys rejected."""
    known = {f.name for f in fields(Config)}
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, value.strip())
    return values


def load_config(path: str | None = None, env=None, overrides: dict | None = None) -> Config:
    env = os.environ if env is None else env
    values = {}
    if path:
        values.update(read_config_file(path))
    for env_key, name in _ENV_KEYS.items():
        raw = env.get(ENV_PREFIX + env_key)
        if raw is not None:
            values[name] = _coerce(name, raw)
    for name, value in (overrides or {}).items():
        if value is not None:
            values[name] = _coerce(name, value)
    return Config(**values)
