"""Experiment configuration files.

An INI file with the sections below; every key is optional except
``[system] n_particles`` and ``g``.  Unknown sections or keys are errors.

.. code-block:: ini

    [system]
    trap = harmonic            ; harmonic | double-well | triple-well
    n_particles = 5
    g = 0.2, 1, 5, 20, inf     ; "inf" is the Tonks-Girardeau limit
    family = cpwf              ; cpwf | cosine | cpwf-lattice

    [run]
    sampler = both             ; vmc | dmc | both
    seed = 1
"""
import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace

from .dmc import DmcParams
from .errors import ConfigError, DomainError
from .model import PRESETS, preset
from .trial import Family
from .vmc import VmcParams

SAMPLERS = ("vmc", "dmc", "both")
ESTIMATORS = ("vmc", "mixed", "extrapolated", "all")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class SystemConfig:
    trap: str = "harmonic"
    n_particles: int = 0
    g: tuple = ()
    family: str = ""
    beta: float = None
    cutoff_length: float = None
    v0: float = None
    phi: float = None
    half_width: float = None


@dataclass(frozen=True)
class ObservablesConfig:
    density: bool = False
    pair: bool = False
    estimator: str = "extrapolated"
    density_bins: int = 200
    pair_bins: int = 100


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig
    sampler: str = "both"
    seed: int = 0
    vmc: VmcParams = field(default_factory=VmcParams)
    dmc: DmcParams = None
    beta_grid: tuple = ()
    observables: ObservablesConfig = field(default_factory=ObservablesConfig)
    out_dir: str = "out"
    formats: tuple = FORMATS

    def trap(self):
        return _trap(self.system)

    def canonical(self):
        """JSON-ready dict that determines the result (no output settings)."""
        d = {"system": asdict(self.system), "sampler": self.sampler, "seed": self.seed,
             "vmc": asdict(self.vmc), "dmc": asdict(self.dmc),
             "beta_grid": list(self.beta_grid), "observables": asdict(self.observables)}
        d["system"]["g"] = [g_token(g) for g in self.system.g]
        d["dmc"]["tau_list"] = list(self.dmc.tau_list)
        return d

    def digest(self):
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def _trap(system):
    overrides = {k: getattr(system, k) for k in ("v0", "phi", "half_width")
                 if getattr(system, k) is not None}
    return preset(system.trap, **overrides)


def g_token(g):
    return "inf" if math.isinf(g) else format(g, ".12g")


def parse_g(text):
    out = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            g = math.inf if item.lower() == "inf" else float(item)
        except ValueError:
            raise ConfigError(f"g value {item!r} is neither a number nor 'inf'") from None
        if math.isnan(g) or g < 0:
            raise ConfigError(f"g value {item!r} must be >= 0")
        out.append(g)
    if not out:
        raise ConfigError("[system] g must list at least one value")
    return tuple(out)


def _floats(text):
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _convert(section, key, raw, kind):
    try:
        if kind is bool:
            return configparser.ConfigParser.BOOLEAN_STATES[raw.strip().lower()]
        if kind is int:
            v = int(raw)
            if v < 0:
                raise ValueError
            return v
        if kind is float:
            return float(raw)
        return raw.strip()
    except (KeyError, ValueError):
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind.__name__}") from None


_SCHEMA = {
    "system": {"trap": str, "n_particles": int, "g": "g", "family": str, "beta": float,
               "cutoff_length": float, "v0": float, "phi": float, "half_width": float},
    "run": {"sampler": str, "seed": int},
    "vmc": {"n_walkers": int, "n_equil_steps": int, "n_steps": int, "step_size": float,
            "n_blocks": int, "sample_stride": int, "hop_fraction": float,
            "beta_grid": "floats"},
    "dmc": {"tau": float, "target_population": int, "n_equil_blocks": int, "n_blocks": int,
            "steps_per_block": int, "tau_list": "floats", "sample_stride": int},
    "observables": {"density": bool, "pair": bool, "estimator": str,
                    "density_bins": int, "pair_bins": int},
    "output": {"directory": str, "formats": str},
}


def _read_sections(parser):
    data = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        schema = _SCHEMA[section]
        values = {}
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            kind = schema[key]
            if kind == "g":
                values[key] = parse_g(raw)
            elif kind == "floats":
                values[key] = _floats(raw)
            else:
                values[key] = _convert(section, key, raw, kind)
        data[section] = values
    return data


def from_mapping(data, seed=None, out_dir=None, formats=None):
    """Validated :class:`ExperimentConfig` from ``{section: {key: value}}``."""
    system = data.get("system", {})
    if "g" not in system:
        raise ConfigError("[system] g is required")
    try:
        sysc = SystemConfig(**system)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if sysc.n_particles < 1:
        raise ConfigError(f"[system] n_particles = {sysc.n_particles} must be >= 1")
    if sysc.trap not in PRESETS:
        raise ConfigError(f"[system] trap {sysc.trap!r} is not one of {sorted(PRESETS)}")
    lattice = PRESETS[sysc.trap].kind == "lattice"
    family = sysc.family or ("cpwf-lattice" if lattice else "cpwf")
    try:
        fam = Family(family)
    except ValueError:
        raise ConfigError(f"[system] family {family!r} is not one of "
                          f"{[f.value for f in Family]}") from None
    if lattice != (fam is Family.CPWF_LATTICE):
        raise ConfigError(f"family {family!r} does not fit trap {sysc.trap!r}")
    sysc = replace(sysc, family=family)
    if sysc.beta is not None and not sysc.beta > 0:
        raise ConfigError("[system] beta must be > 0")
    if sysc.cutoff_length is not None and not sysc.cutoff_length > 0:
        raise ConfigError("[system] cutoff_length must be > 0")

    run = data.get("run", {})
    sampler = run.get("sampler", "both")
    if sampler not in SAMPLERS:
        raise ConfigError(f"[run] sampler {sampler!r} is not one of {SAMPLERS}")
    seed = run.get("seed", 0) if seed is None else seed
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")

    vmc_kw = dict(data.get("vmc", {}))
    beta_grid = tuple(vmc_kw.pop("beta_grid", ()))
    if any(not b > 0 for b in beta_grid):
        raise ConfigError("[vmc] beta_grid values must be > 0")
    dmc_kw = dict(data.get("dmc", {}))
    if "tau_list" in dmc_kw:
        dmc_kw["tau_list"] = tuple(dmc_kw["tau_list"])
    obs = ObservablesConfig(**data.get("observables", {}))
    if obs.estimator not in ESTIMATORS:
        raise ConfigError(f"[observables] estimator {obs.estimator!r} is not one of {ESTIMATORS}")
    if obs.pair and sysc.n_particles < 2:
        raise ConfigError("pair correlations need n_particles >= 2")
    if obs.density_bins < 1 or obs.pair_bins < 1:
        raise ConfigError("histogram bin counts must be >= 1")
    try:
        trap = _trap(sysc)
        vmc = VmcParams(seed=seed, **vmc_kw)
        dmc = DmcParams.for_trap(trap, seed=seed, **dmc_kw)
    except (ValueError, DomainError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    output = data.get("output", {})
    out_dir = out_dir or output.get("directory", "out")
    fmts = formats or tuple(f.strip() for f in output.get("formats", "csv,json").split(",") if f.strip())
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise ConfigError(f"output formats must be drawn from {FORMATS}, got {fmts}")
    return ExperimentConfig(system=sysc, sampler=sampler, seed=seed, vmc=vmc, dmc=dmc,
                            beta_grid=beta_grid, observables=obs, out_dir=out_dir,
                            formats=tuple(fmts))


def load(path, **overrides):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return from_mapping(_read_sections(parser), **overrides)
