"""Plain-text experiment configuration.

The format is INI: ``[section]`` headers and one ``key = value`` per line.
Lists are comma-separated.  Every key is checked against a schema before
any computation so that errors point at the offending line.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import coeff


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based or None."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{message}")


def _floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s):
    return [int(v) for v in s.split(",") if v.strip()]


def _words(s):
    return [w for w in s.replace(",", " ").split() if w]


def _points(s):
    pts = []
    for chunk in s.split(";"):
        if chunk.strip():
            pts.append([float(v) for v in chunk.split()])
    return pts


# section -> key -> (parser, default); default None means optional without value
SCHEMA = {
    "run": {"seed": (int, 0), "threads": (int, 1)},
    "field": {
        "kind": (str, None),
        "d": (int, None),
        "phi": (float, None),
        "re": (_floats, None),
        "im": (_floats, None),
        "contrast": (float, None),
        "tiling": (int, 4),
        "values": (int, 4),
        "spread": (float, 0.3),
        "imag": (float, 0.0),
        "seed": (int, 0),
        "path": (str, None),
    },
    "domain": {
        "shape": (str, "box"),
        "d": (int, 2),
        "dirichlet": (str, "all"),
        "M": (float, 1.0),
    },
    "grid": {"ns": (_ints, [16, 32, 64])},
    "pcalc": {"p_grid": (_floats, [2.0, 2.5, 3.0, 4.0, 8.0]), "tol": (float, 1e-4),
              "angle_p": (float, None)},
    "scan": {
        "p": (float, 2.0),
        "theta": (float, None),
        "n_lambda": (int, 50),
        "probes": (int, 12),
        "lam_min": (float, 1e-2),
        "lam_max": (float, 1e2),
        "margin": (float, 0.01),
        "keys": (_words, ["res", "div"]),
        "refine": (int, 2),
        "power_steps": (int, 10),
        "slack": (float, 1.05),
    },
    "rh": {
        "p": (float, 3.0),
        "lam": (complex, 1.0),
        "r": (float, 0.25),
        "c": (float, None),
        "q": (float, None),
        "trials": (int, 20),
        "gap": (float, None),
        "boundary_fraction": (float, 0.5),
        "center_lo": (float, 0.3),
        "center_hi": (float, 0.7),
    },
    "meyers": {
        "contrasts": (_floats, None),
        "tiling": (int, 4),
        "p_grid": (_floats, [2.0, 2.5, 3.0, 3.5, 4.0]),
        "lam": (complex, 1.0),
        "probes": (int, 30),
        "refine": (int, 4),
        "power_steps": (int, 20),
        "pool_steps": (int, 5),
        "min_eps": (float, None),
    },
    "kernel": {
        "times": (_floats, [0.005, 0.01, 0.02]),
        "sources": (_points, None),
        "m": (int, 64),
        "startup": (int, 2),
        "rel_floor": (float, 1e-4),
        "b_min": (float, None),
        "b_max": (float, None),
    },
}

REQUIRED = {
    "pcalc": ("field",),
    "scan": ("field", "domain", "grid", "scan"),
    "rh": ("field", "domain", "grid", "rh"),
    "meyers": ("domain", "grid", "meyers"),
    "kernel": ("field", "domain", "grid", "kernel"),
}

FIELD_KINDS = ("identity", "rotation", "constant", "contrast", "random", "table")


def _line_map(text):
    """(section, key) -> line number, for diagnostics."""
    out, section = {}, None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out[(section, None)] = i
        elif "=" in line and section is not None:
            out[(section, line.split("=", 1)[0].strip())] = i
    return out


@dataclass
class ExperimentConfig:
    """Parsed configuration; ``text`` is echoed verbatim into outputs."""

    text: str
    values: dict
    lines: dict = dc_field(default_factory=dict, repr=False)
    path: str = ""

    def section(self, name):
        return self.values.get(name, {})

    def get(self, section, key):
        return self.values.get(section, {}).get(key, SCHEMA[section][key][1])

    def has(self, section, key=None):
        if key is None:
            return section in self.values
        return key in self.values.get(section, {})

    def error(self, message, section, key=None):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        name = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(f"{name}: {message}", line, key)

    @property
    def seed(self):
        return self.get("run", "seed")

    @property
    def threads(self):
        return self.get("run", "threads")


def parse_config(text, path=""):
    """Parse and type-check ``text`` against the schema."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=path or "<config>")
    except configparser.Error as err:
        raise ConfigError(str(err).splitlines()[0], getattr(err, "lineno", None)) from None
    lines = _line_map(text)
    values = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", lines.get((sec, None)))
        values[sec] = {}
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"[{sec}] unknown key {key!r}", lines.get((sec, key)), key)
            parser = SCHEMA[sec][key][0]
            try:
                values[sec][key] = parser(raw.strip())
            except ValueError as err:
                raise ConfigError(f"[{sec}] {key}: {err}", lines.get((sec, key)), key) from None
    return ExperimentConfig(text, values, lines, path)


def load_config(path, command=None, seed=None, threads=None):
    """Read, parse and validate a config file for ``command``.

    ``seed`` and ``threads`` override the ``[run]`` section.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None
    cfg = parse_config(text, path)
    if seed is not None:
        cfg.values.setdefault("run", {})["seed"] = seed
    if threads is not None:
        cfg.values.setdefault("run", {})["threads"] = threads
    if command is not None:
        validate(cfg, command)
    return cfg


def validate(cfg, command):
    """Check everything ``command`` needs; raises ConfigError."""
    if command not in REQUIRED:
        raise ConfigError(f"unknown command {command!r}")
    for sec in REQUIRED[command]:
        if sec == "field" and command == "meyers":
            continue
        if not cfg.has(sec):
            raise ConfigError(f"missing section [{sec}]")
    if cfg.threads < 1:
        raise cfg.error("must be at least 1", "run", "threads")
    if command == "meyers" and cfg.get("meyers", "contrasts") is None and not cfg.has("field"):
        raise cfg.error("either contrasts or a [field] section is required", "meyers")
    if cfg.has("domain"):
        domain_spec(cfg)
    if cfg.has("field"):
        build_field(cfg)
    if cfg.has("grid") or command in ("scan", "rh", "meyers", "kernel"):
        ns = cfg.get("grid", "ns")
        if not ns:
            raise cfg.error("no grid sizes", "grid", "ns")
        if any(n < 4 for n in ns):
            raise cfg.error("grid sizes must be at least 4", "grid", "ns")
        if cfg.has("domain") and cfg.get("domain", "shape") == "lshape" and any(n % 2 for n in ns):
            raise cfg.error("the L-shape needs even grid sizes", "grid", "ns")
    check = _CHECKS.get(command)
    if check:
        check(cfg)
    return cfg


def _positive(cfg, sec, keys):
    for k in keys:
        v = cfg.get(sec, k)
        if v is not None and not v > 0:
            raise cfg.error("must be positive", sec, k)


def _check_pcalc(cfg):
    grid = cfg.get("pcalc", "p_grid")
    if not grid or any(p <= 1 for p in grid):
        raise cfg.error("exponents must exceed 1", "pcalc", "p_grid")
    _positive(cfg, "pcalc", ("tol",))


def _check_scan(cfg):
    _positive(cfg, "scan", ("p", "n_lambda", "probes", "lam_min", "lam_max", "slack"))
    if cfg.get("scan", "p") <= 1:
        raise cfg.error("p must exceed 1", "scan", "p")
    if cfg.get("scan", "lam_min") >= cfg.get("scan", "lam_max"):
        raise cfg.error("lam_min must be below lam_max", "scan", "lam_min")
    th = cfg.get("scan", "theta")
    if th is not None and not math.pi / 2 < th < math.pi:
        raise cfg.error("theta must lie in (pi/2, pi)", "scan", "theta")
    from .resolvent import ESTIMATES
    bad = [k for k in cfg.get("scan", "keys") if k not in ESTIMATES]
    if bad or not cfg.get("scan", "keys"):
        raise cfg.error(f"keys must be among {ESTIMATES}", "scan", "keys")


def _check_rh(cfg):
    _positive(cfg, "rh", ("r", "c", "q", "trials", "gap"))
    if cfg.get("rh", "p") < 2:
        raise cfg.error("p must be at least 2", "rh", "p")
    lo, hi = cfg.get("rh", "center_lo"), cfg.get("rh", "center_hi")
    if not 0 <= lo < hi <= 1:
        raise cfg.error("need 0 <= center_lo < center_hi <= 1", "rh", "center_lo")
    if not 0 <= cfg.get("rh", "boundary_fraction") <= 1:
        raise cfg.error("must lie in [0, 1]", "rh", "boundary_fraction")
    if cfg.get("domain", "shape") != "box":
        raise cfg.error("reverse Hölder trials need a box domain", "domain", "shape")
    if cfg.get("domain", "d") == 2 and cfg.get("rh", "c") is None:
        raise cfg.error("d = 2 has no default inner radius; set c", "rh")
    if min(cfg.get("grid", "ns")) * cfg.get("rh", "r") < 1:
        raise cfg.error("radius below the coarsest mesh size", "rh", "r")


def _check_meyers(cfg):
    grid = cfg.get("meyers", "p_grid")
    if not grid or any(p <= 1 for p in grid):
        raise cfg.error("exponents must exceed 1", "meyers", "p_grid")
    _positive(cfg, "meyers", ("probes", "tiling", "refine"))
    cs = cfg.get("meyers", "contrasts")
    if cs is not None and (not cs or any(c <= 0 for c in cs)):
        raise cfg.error("contrasts must be positive", "meyers", "contrasts")
    if len(cfg.get("grid", "ns")) < 2:
        raise cfg.error("at least two grid sizes are needed", "grid", "ns")


def _check_kernel(cfg):
    times = cfg.get("kernel", "times")
    if len(times) < 2 or any(t <= 0 for t in times):
        raise cfg.error("need at least two positive times", "kernel", "times")
    _positive(cfg, "kernel", ("m", "rel_floor"))
    src = cfg.get("kernel", "sources")
    d = cfg.get("domain", "d") if cfg.get("domain", "shape") == "box" else 2
    if src is not None and (not src or any(len(x) != d for x in src)):
        raise cfg.error(f"sources must be ';'-separated points with {d} coordinates",
                        "kernel", "sources")


_CHECKS = {"pcalc": _check_pcalc, "scan": _check_scan, "rh": _check_rh,
           "meyers": _check_meyers, "kernel": _check_kernel}


def domain_spec(cfg):
    shape = cfg.get("domain", "shape")
    try:
        if shape == "box":
            return coeff.DomainSpec.box(cfg.get("domain", "d"), cfg.get("domain", "dirichlet"),
                                        cfg.get("domain", "M"))
        if shape == "lshape":
            return coeff.DomainSpec.lshape(cfg.get("domain", "dirichlet"), cfg.get("domain", "M"))
    except ValueError as err:
        raise cfg.error(str(err), "domain") from None
    raise cfg.error(f"unknown shape {shape!r}", "domain", "shape")


def field_dimension(cfg):
    dom = None
    if cfg.has("domain"):
        dom = 2 if cfg.get("domain", "shape") == "lshape" else cfg.get("domain", "d")
    d = cfg.get("field", "d")
    if d is None:
        return dom or 2
    if dom is not None and d != dom:
        raise cfg.error(f"field dimension {d} differs from domain dimension {dom}", "field", "d")
    if d < 1:
        raise cfg.error("must be positive", "field", "d")
    return d


def build_field(cfg):
    """Coefficient field described by the ``[field]`` section."""
    kind = cfg.get("field", "kind")
    if kind is None:
        raise cfg.error("missing field kind", "field")
    if kind not in FIELD_KINDS:
        raise cfg.error(f"unknown kind {kind!r}, expected one of {FIELD_KINDS}", "field", "kind")
    d = field_dimension(cfg)

    def need(key):
        v = cfg.get("field", key)
        if v is None:
            raise cfg.error(f"kind {kind!r} requires {key!r}", "field")
        return v

    try:
        if kind == "identity":
            return coeff.make_constant(np.eye(d))
        if kind == "rotation":
            return coeff.make_scalar_rotation(need("phi"), d)
        if kind == "constant":
            re = np.array(need("re"))
            im = np.array(cfg.get("field", "im") or [0.0] * len(re))
            if len(re) != d * d or len(im) != d * d:
                raise cfg.error(f"re and im need {d * d} entries", "field", "re")
            return coeff.make_constant((re + 1j * im).reshape(d, d))
        if kind == "contrast":
            return coeff.make_contrast_checkerboard(need("contrast"), cfg.get("field", "tiling"), d)
        if kind == "random":
            return coeff.make_random_checkerboard(cfg.get("field", "seed"), d,
                                                  cfg.get("field", "tiling"),
                                                  cfg.get("field", "values"),
                                                  cfg.get("field", "spread"),
                                                  cfg.get("field", "imag"))
        return coeff.load_table(need("path"), d, cfg.get("field", "tiling"))
    except ConfigError:
        raise
    except (ValueError, OSError) as err:
        raise cfg.error(str(err), "field") from None
