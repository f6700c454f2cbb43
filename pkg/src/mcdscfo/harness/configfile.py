"""
Flat ``key = value`` experiment configuration.

Keys live in four namespaces (``system``, ``channel``, ``estimator``,
``harness``).  Blank lines and ``#`` comments are ignored.  Unknown keys,
duplicate keys and malformed values raise :class:`ConfigurationError`.
"""

import math
from dataclasses import dataclass, field, fields

from ..config import SystemConfig
from ..exceptions import ConfigurationError

__all__ = ["SCHEMA", "Settings", "parse_config", "load_config", "settings_from_mapping"]


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _real(text):
    low = text.strip().lower()
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not allowed")
    return value


def _int(text):
    return int(text.strip(), 0)


def _optional_int(text):
    return None if text.strip().lower() in ("auto", "none") else _int(text)


def _list(item):
    def parse(text):
        parts = [p for p in text.replace(",", " ").split() if p]
        if not parts:
            raise ValueError("empty list")
        return tuple(item(p) for p in parts)

    return parse


def _choice(*options):
    def parse(text):
        value = text.strip().lower()
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return value

    return parse


def _names(*options):
    item = _choice(*options)
    return _list(item)


# key -> (parser, default)
SCHEMA = {
    "system.U": (_int, 2),
    "system.S": (_int, 128),
    "system.M_B": (_int, 2),
    "system.Q": (_int, 8),
    "system.J": (_int, 2),
    "system.P": (_int, 2),
    "system.N_CP": (_int, 16),
    "system.N_sym": (_int, 100),
    "system.constellation": (_choice("qpsk"), "qpsk"),
    "channel.taps": (_optional_int, None),
    "channel.profile": (_choice("exponential", "uniform"), "exponential"),
    "channel.epsilon": (_real, 0.2),
    "channel.snr_db": (_real, 10.0),
    "channel.delays": (_choice("uniform", "zero"), "uniform"),
    "estimator.n_fft": (_optional_int, None),
    "estimator.grid_step": (_real, 0.01),
    "estimator.window": (_real, 0.5),
    "estimator.template": (_choice("comb", "code"), "comb"),
    "estimator.compensation": (_choice("estimated", "genie", "none"), "estimated"),
    "harness.trials": (_int, 2000),
    "harness.seed": (_int, 20240101),
    "harness.workers": (_int, 1),
    "harness.chunk_size": (_int, 64),
    "harness.users": (_int, 1),
    "harness.series": (_names("mcdscdma", "ofdm"), ("mcdscdma", "ofdm")),
    "harness.ncp_grid": (_list(_int), (4, 8, 16, 32, 64)),
    "harness.nsym_grid": (_list(_int), (25, 50, 100, 200, 400)),
    "harness.snr_grid": (_list(_real), (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)),
    "harness.ber_snr_grid": (_list(_real), (0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0)),
    "harness.max_frames": (_int, 100_000),
    "harness.target_errors": (_int, 500),
    "harness.reference": (_bool, False),
    "harness.reference_trials": (_int, 100_000),
    "harness.reference_snr": (_list(_real), (20.0, 30.0)),
}


@dataclass(frozen=True)
class Settings:
    """Parsed configuration: the waveform dimensions plus run options."""

    system: SystemConfig = field(default_factory=SystemConfig)
    options: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.options[key]

    def replace(self, **changes):
        """Copy with dotted keys (written with ``__`` for the dot) overridden."""
        values = dict(self.options)
        for name, value in changes.items():
            values[name.replace("__", ".")] = value
        return settings_from_mapping(values, parsed=True)


_SYSTEM_FIELDS = {f.name for f in fields(SystemConfig)}


def settings_from_mapping(values, parsed=False):
    """
    Build :class:`Settings` from a ``{key: value}`` mapping.

    With ``parsed=False`` values are strings and go through the schema
    parsers; otherwise they are used as given.
    """
    options = {key: default for key, (_, default) in SCHEMA.items()}
    for key, raw in values.items():
        if key not in SCHEMA:
            raise ConfigurationError(f"unknown configuration key {key!r}")
        parser = SCHEMA[key][0]
        if parsed:
            options[key] = raw
            continue
        try:
            options[key] = parser(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad value for {key}: {raw!r} ({exc})") from exc
    kwargs = {key.split(".", 1)[1]: options[key] for key in options if key.startswith("system.")}
    unknown = set(kwargs) - _SYSTEM_FIELDS
    if unknown:
        raise ConfigurationError(f"unsupported system keys {sorted(unknown)}")
    system = SystemConfig(**kwargs)
    for key in ("harness.trials", "harness.workers", "harness.chunk_size", "harness.users",
                "harness.max_frames", "harness.reference_trials"):
        if options[key] < 1:
            raise ConfigurationError(f"{key} must be at least 1")
    if options["harness.target_errors"] < 0:
        raise ConfigurationError("harness.target_errors must be nonnegative")
    if options["estimator.grid_step"] <= 0 or options["estimator.window"] <= 0:
        raise ConfigurationError("estimator.grid_step and estimator.window must be positive")
    if options["channel.taps"] is not None and options["channel.taps"] < 1:
        raise ConfigurationError("channel.taps must be at least 1")
    for key in ("harness.ncp_grid", "harness.nsym_grid", "harness.snr_grid", "harness.ber_snr_grid"):
        grid = options[key]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError(f"{key} must be strictly increasing")
    return Settings(system=system, options=options)


def parse_config(text, source="<config>"):
    """Parse configuration text into :class:`Settings`."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in body.split("=", 1))
        if not key or not value:
            raise ConfigurationError(f"{source}:{lineno}: empty key or value")
        if key in values:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        if key not in SCHEMA:
            raise ConfigurationError(f"{source}:{lineno}: unknown configuration key {key!r}")
        values[key] = value
    return settings_from_mapping(values)


def load_config(path):
    """Read and parse a configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))
