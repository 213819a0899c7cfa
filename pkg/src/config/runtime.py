"""Runtime configuration for the detector service and the thin client.

The file is dotenv-style ``key=value``, read with django-environ into a private
mapping so loading a config never leaks into ``os.environ``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import environ
from django.core.exceptions import ImproperlyConfigured

from config.exceptions import ConfigurationError
from detector.bloom import BloomParams
from detector.coincidence import FilterPolicy
from detector.extraction import ExtractionConfig, Pairing
from detector.hashing import HashParams

logger = logging.getLogger(__name__)

Address = tuple[str, int]

SCHEMA: dict[str, Any] = {
    'k_min': (int, 20),
    'k_max': (str, ''),
    'pairing': (str, Pairing.ADJACENT_DISJOINT.value),
    'tau': (float, 0.3),
    'c': (float, 3.0),
    'min_population': (int, 10),
    'period_seconds': (int, 3600),
    'spool_dir': (str, 'var/spool'),
    'log_path': (str, 'var/suspects.log'),
    'bloom_m': (int, 10_000),
    'bloom_k': (int, 4),
    'hash_q': (int, 257),
    'listen': (str, '127.0.0.1:9450'),
    'endpoints': (list, []),
    'broadcast': (bool, False),
    'client_listen': (str, '127.0.0.1:9451'),
    'db_path': (str, 'var/client/signatures.amp1'),
    'scan_root': (str, 'var/client/scan'),
    'quarantine_dir': (str, 'var/client/quarantine'),
    'timeout_seconds': (int, 60),
}


def parse_address(value: str) -> Address:
    """``host:port`` -> ``(host, port)``."""
    host, sep, port = value.strip().rpartition(':')
    if not sep or not port.isdigit() or not 0 <= int(port) <= 0xFFFF:
        msg = f'expected host:port, got {value!r}'
        raise ConfigurationError(msg)
    return (host.strip('[]') or '0.0.0.0', int(port))  # noqa: S104


@dataclass(frozen=True)
class RuntimeConfig:
    k_min: int = 20
    k_max: int | None = None
    pairing: Pairing = Pairing.ADJACENT_DISJOINT
    tau: float = 0.3
    c: float = 3.0
    min_population: int = 10
    period_seconds: int = 3600
    spool_dir: Path = Path('var/spool')
    log_path: Path = Path('var/suspects.log')
    bloom_m: int = 10_000
    bloom_k: int = 4
    hash_q: int = 257
    listen: Address = ('127.0.0.1', 9450)
    endpoints: tuple[Address, ...] = ()
    broadcast: bool = False
    client_listen: Address = ('127.0.0.1', 9451)
    db_path: Path = Path('var/client/signatures.amp1')
    scan_root: Path = Path('var/client/scan')
    quarantine_dir: Path = Path('var/client/quarantine')
    timeout_seconds: int = 60
    source: Path | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.period_seconds < 1:
            msg = f'period_seconds must be at least 1, got {self.period_seconds}'
            raise ConfigurationError(msg)
        # building the parameter objects validates the remaining values
        self.extraction_config()
        self.filter_policy()
        self.hash_params()
        self.bloom_params()

    def extraction_config(self) -> ExtractionConfig:
        return ExtractionConfig(K_min=self.k_min, K_max=self.k_max, pairing=self.pairing)

    def filter_policy(self) -> FilterPolicy:
        return FilterPolicy(tau=self.tau, c=self.c, min_population=self.min_population)

    def hash_params(self) -> HashParams:
        return HashParams(q=self.hash_q, M=self.bloom_m, K_min=self.k_min)

    def bloom_params(self) -> BloomParams:
        return BloomParams(m=self.bloom_m, k=self.bloom_k)

    def snapshot(self) -> dict[str, Any]:
        """Plain-JSON view of the detection parameters."""
        return {
            'k_min': self.k_min,
            'k_max': self.k_max,
            'pairing': self.pairing.value,
            'tau': self.tau,
            'c': self.c,
            'min_population': self.min_population,
            'bloom_m': self.bloom_m,
            'bloom_k': self.bloom_k,
            'hash_q': self.hash_q,
        }


def _isolated_env(path: Path) -> environ.Env:
    class FileEnv(environ.Env):
        ENVIRON: dict[str, str] = {}

    FileEnv.read_env(path, overwrite=True)
    return FileEnv(**SCHEMA)


def load_config(path: Path | str | None = None, **overrides: Any) -> RuntimeConfig:
    """Read a ``key=value`` config file; keys that are absent keep their defaults.

    Raises:
        ConfigurationError: for unreadable files or values that do not parse.
    """
    if path is None:
        values: dict[str, Any] = {}
        source = None
    else:
        source = Path(path)
        if not source.is_file():
            msg = f'config file {source} does not exist'
            raise ConfigurationError(msg)
        env = _isolated_env(source)
        for key in sorted(set(env.ENVIRON) - set(SCHEMA)):
            logger.warning('Ignoring unknown config key %r in %s', key, source)
        values = {}
        for key in SCHEMA:
            if key not in env.ENVIRON:
                continue
            try:
                values[key] = env(key)
            except (ValueError, ImproperlyConfigured) as exc:
                msg = f'{key}: {exc}'
                raise ConfigurationError(msg) from exc
    values.update(overrides)
    return _build(values, source)


def _build(values: dict[str, Any], source: Path | None) -> RuntimeConfig:
    kwargs: dict[str, Any] = {}
    known = {f.name for f in fields(RuntimeConfig)}
    for key, value in values.items():
        if key not in known:
            continue
        if key == 'k_max':
            text = str(value).strip()
            if text.lower() in {'', 'none'}:
                kwargs[key] = None
            elif text.isdigit():
                kwargs[key] = int(text)
            else:
                msg = f'k_max: expected an integer or nothing, got {value!r}'
                raise ConfigurationError(msg)
        elif key == 'pairing':
            try:
                kwargs[key] = Pairing(value)
            except ValueError:
                msg = f'pairing: unknown strategy {value!r}'
                raise ConfigurationError(msg) from None
        elif key in {'listen', 'client_listen'}:
            kwargs[key] = value if isinstance(value, tuple) else parse_address(value)
        elif key == 'endpoints':
            kwargs[key] = tuple(item if isinstance(item, tuple) else parse_address(item) for item in value if item)
        elif key in {'spool_dir', 'log_path', 'db_path', 'scan_root', 'quarantine_dir'}:
            kwargs[key] = Path(value)
        else:
            kwargs[key] = value
    return RuntimeConfig(**kwargs, source=source)
