"""INI configuration files, ``key=value`` overrides and result files.

A configuration has the sections ``[hardware]``, ``[chain]``, ``[targets]``,
``[optimizer]`` and ``[bounds]``; every key is optional.  Times may be given
with an ``_s`` suffix (``T2_s = 10``) and bounds as ``low, high``.
"""
import configparser
import csv
import dataclasses
import io
import json
import math
import numbers

import numpy as np

from ._validation import InvalidParameterError
from .analytics import TARGETS_A, Targets
from .hardware import BASELINE, DEFAULT_BOUNDS, SINGLE_CLICK, Bounds, HardwareParams, Strategy
from .optimizer import OptimizerConfig
from .simulation import ChainConfig

SECTIONS = ("hardware", "chain", "targets", "optimizer", "bounds")
SIGNIFICANT_DIGITS = 12

_HW_FIELDS = {f.name: f.type for f in dataclasses.fields(HardwareParams)}
_CHAIN_KEYS = {
    "total_distance": float,
    "num_repeaters": int,
    "link_protocol": str,
    "strategy": str,
    "alpha": float,
    "realizations": int,
    "rng_seed": int,
    "include_cycle_time": bool,
}
_TARGET_KEYS = {"F_t": float, "R_t": float}
_OPT_KEYS = {
    "population": int,
    "generations": int,
    "elites": int,
    "crossover_count": int,
    "mutant_count": int,
    "realizations": int,
    "A": float,
    "mutation_width": float,
    "scheme_redraw": float,
    "hill_step": float,
    "hill_min_step": float,
    "hill_budget": int,
    "rng_seed": int,
}
_BOUND_KEYS = {f.name: tuple for f in dataclasses.fields(Bounds)}
_SCHEMA = {
    "hardware": {k: (int if k == "N_qb" else float) for k in _HW_FIELDS},
    "chain": _CHAIN_KEYS,
    "targets": _TARGET_KEYS,
    "optimizer": _OPT_KEYS,
    "bounds": _BOUND_KEYS,
}
_KM_ALIASES = {"total_distance_km": "total_distance"}


class ConfigError(InvalidParameterError):
    """The configuration file or an override cannot be parsed or validated."""


def _canonical_key(section, key):
    if section == "chain" and key in _KM_ALIASES:
        return _KM_ALIASES[key]
    schema = _SCHEMA[section]
    if key in schema:
        return key
    if key.endswith("_s") and key[:-2] in schema:
        return key[:-2]
    raise ConfigError(f"unknown key {key!r} in section [{section}]")


def _convert(kind, raw, where):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is tuple:
            parts = [float(p) for p in raw.replace("[", "").replace("]", "").split(",")]
            if len(parts) != 2:
                raise ValueError(raw)
            return tuple(parts)
        if kind is int:
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        if kind is float:
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{where}: cannot read {raw!r} as {kind.__name__}") from None


def _find_section(key):
    hits = []
    for section in SECTIONS:
        try:
            _canonical_key(section, key)
            hits.append(section)
        except ConfigError:
            pass
    if not hits:
        raise ConfigError(f"override names unknown key {key!r}")
    # a bare key shared by several sections applies to the first, in section order
    return hits[0]


def parse_overrides(items):
    """Turn ``["T2=10", "chain.alpha=0.2"]`` into ``{(section, key): raw}``."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if "." in key:
            section, key = key.split(".", 1)
            if section not in SECTIONS:
                raise ConfigError(f"unknown section {section!r} in override {item!r}")
        else:
            section = _find_section(key)
        out[(section, _canonical_key(section, key))] = raw.strip()
    return out


def read_raw(path=None, text=None, overrides=None):
    """Section -> {canonical key: typed value} from a file, a string and overrides."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh, source=str(path))
        if text is not None:
            parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from None
    raw = {s: {} for s in SECTIONS}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            canon = _canonical_key(section, key)
            raw[section][canon] = _convert(_SCHEMA[section][canon], value, f"[{section}] {key}")
    for (section, key), value in parse_overrides(overrides).items():
        raw[section][key] = _convert(_SCHEMA[section][key], value, f"override {section}.{key}")
    return raw


def build_config(raw):
    """Validated ``(ChainConfig, OptimizerConfig, Targets)`` from typed sections."""
    try:
        hw = BASELINE.replace(**raw["hardware"])
        chain = dict(raw["chain"])
        link = chain.pop("link_protocol", SINGLE_CLICK)
        scheme = chain.pop("strategy", "swap-asap")
        strategy = Strategy.from_scheme(scheme, link)
        cfg = ChainConfig(hw=hw, strategy=strategy, **chain)
        targets = Targets(**{**dataclasses.asdict(TARGETS_A), **raw["targets"]})
        bounds = dataclasses.replace(DEFAULT_BOUNDS, **raw["bounds"])
        opt = dict(raw["optimizer"])
        opt.setdefault("rng_seed", cfg.rng_seed)
        ocfg = OptimizerConfig(link_protocol=link, targets=targets, base=hw, bounds=bounds, **opt)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, ocfg, targets


def load_config(path=None, overrides=None, text=None):
    """Read, override and validate a configuration.

    Parameters
    ----------
    path : str or Path, optional
        INI file; omitted keys take the compiled-in defaults.
    overrides : list of str, optional
        ``key=value`` or ``section.key=value`` items applied after the file.

    Returns
    -------
    ChainConfig, OptimizerConfig, Targets

    Raises
    ------
    ConfigError
        On a parse error, an unknown key or a violated parameter invariant.
    """
    return build_config(read_raw(path, text, overrides))


def config_echo(cfg, ocfg, targets):
    """Plain-dict view of a configuration that :func:`echo_to_ini` can reload."""
    chain = {
        "total_distance": cfg.total_distance,
        "num_repeaters": cfg.num_repeaters,
        "link_protocol": cfg.strategy.link_protocol,
        "strategy": cfg.strategy.scheme,
        "realizations": cfg.realizations,
        "rng_seed": cfg.rng_seed,
        "include_cycle_time": cfg.include_cycle_time,
    }
    if cfg.alpha is not None:
        chain["alpha"] = cfg.alpha
    opt = {k: getattr(ocfg, k) for k in _OPT_KEYS if getattr(ocfg, k) is not None}
    return {
        "hardware": cfg.hw.to_dict(),
        "chain": chain,
        "targets": dataclasses.asdict(targets),
        "optimizer": opt,
        "bounds": {k: list(v) for k, v in ocfg.bounds.to_dict().items()},
    }


def echo_to_ini(echo):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for section in SECTIONS:
        parser.add_section(section)
        for key, value in echo.get(section, {}).items():
            if isinstance(value, (list, tuple)):
                text = ", ".join(repr(float(v)) for v in value)
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            parser.set(section, key, text)
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


# -- results ------------------------------------------------------------------------


def _round(value):
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, numbers.Integral):
        return int(value)
    if isinstance(value, numbers.Real):
        value = float(value)
        if not math.isfinite(value):
            return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    if isinstance(value, dict):
        return {str(k): _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    if isinstance(value, np.ndarray):
        return _round(value.tolist())
    return value


def _cell(value):
    value = _round(value)
    if isinstance(value, float):
        return f"{value:.{SIGNIFICANT_DIGITS}g}"
    return "" if value is None else str(value)


def format_json(record):
    return json.dumps(_round(record), indent=2, sort_keys=True) + "\n"


def format_csv(rows):
    rows = list(rows)
    if not rows:
        return ""
    columns = list(rows[0].keys())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def emit_results(result, path=None, fmt="json"):
    """Serialize ``result`` with 12 significant digits.

    ``fmt="json"`` writes a mapping; ``fmt="csv"`` writes a list of row
    mappings with the keys of the first row as header.  Returns the text and
    writes it to ``path`` unless ``path`` is ``None``.
    """
    if fmt == "json":
        text = format_json(result)
    elif fmt == "csv":
        text = format_csv(result)
    else:
        raise InvalidParameterError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
