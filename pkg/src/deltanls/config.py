"""Run configuration: a sectioned INI file validated into :class:`RunConfig`.

Example::

    [domain]
    L = 20
    n = 4096

    [time]
    T = 1
    h = 1e-3
    snapshot_times = 0.5, 1.0

    [nonlinearity]
    name = saturated          ; or: coefficients = 0, -1, 0.5
    truncation = auto         ; none | auto | <radius>

    [initial]
    kind = exp_kink           ; gaussian | exp_kink | rough | file
    amplitude = 1
    kappa = compatible

    [study]
    epsilons = 0.4, 0.2, 0.1, 0.05
    R = 2

    [output]
    dir = out
    formats = csv, snapshot
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

from .model import CATALOGUE, Grid, Nonlinearity, Wavefunction, get_nonlinearity, polynomial

DEFAULTS = {
    "domain": {"L": "20", "n": "4096"},
    "time": {"T": "1", "h": "1e-3", "snapshot_times": ""},
    "nonlinearity": {"name": "saturated", "A": "0", "B": "1", "truncation": "none"},
    "initial": {"kind": "gaussian"},
    "study": {"epsilons": "0.4, 0.2, 0.1, 0.05", "R": "2", "tau": ""},
    "output": {"dir": "out", "formats": "csv"},
}

INITIAL_KINDS = ("gaussian", "exp_kink", "rough", "file")
INITIAL_KEYS = {
    "gaussian": {"amplitude", "width", "center", "k0"},
    "exp_kink": {"amplitude", "kappa", "bump"},
    "rough": {"seed", "exponent", "envelope", "charge"},
    "file": {"path"},
}
OUTPUT_FORMATS = ("csv", "snapshot")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every violation found."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class DomainConfig:
    L: float = 20.0
    n: int = 4096


@dataclass(frozen=True)
class TimeConfig:
    T: float = 1.0
    h: float = 1e-3
    snapshot_times: tuple[float, ...] = ()


@dataclass(frozen=True)
class NonlinearityConfig:
    name: str = "saturated"
    coefficients: tuple[float, ...] | None = None
    A: float = 0.0
    B: float = 1.0
    truncation: str | float = "none"


@dataclass(frozen=True)
class InitialConfig:
    kind: str = "gaussian"
    params: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class StudyConfig:
    epsilons: tuple[float, ...] = (0.4, 0.2, 0.1, 0.05)
    R: float = 2.0
    tau: float | None = None


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    formats: tuple[str, ...] = ("csv",)


@dataclass(frozen=True)
class RunConfig:
    domain: DomainConfig = DomainConfig()
    time: TimeConfig = TimeConfig()
    nonlinearity: NonlinearityConfig = NonlinearityConfig()
    initial: InitialConfig = InitialConfig()
    study: StudyConfig = StudyConfig()
    output: OutputConfig = OutputConfig()
    source: str | None = None
    sha256: str = ""

    @property
    def grid(self) -> Grid:
        return Grid(self.domain.L, self.domain.n)


# {{{ parsing helpers


class _Collector:
    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser
        self.errors: list[str] = []

    def raw(self, section: str, key: str) -> str:
        return self.parser.get(section, key, fallback=DEFAULTS.get(section, {}).get(key, ""))

    def number(self, section: str, key: str, kind=float, check=None, msg: str = ""):
        text = self.raw(section, key).strip()
        try:
            value = kind(text)
        except ValueError:
            self.errors.append(f"{section}.{key}: not a valid {kind.__name__}: {text!r}")
            return None
        if kind is float and not math.isfinite(value):
            self.errors.append(f"{section}.{key}: must be finite, got {text!r}")
            return None
        if check is not None and not check(value):
            self.errors.append(f"{section}.{key}: {msg} (got {value!r})")
            return None
        return value

    def float_list(self, section: str, key: str) -> tuple[float, ...] | None:
        text = self.raw(section, key).strip()
        if not text:
            return ()
        try:
            return tuple(float(p) for p in text.replace(";", ",").split(",") if p.strip())
        except ValueError:
            self.errors.append(f"{section}.{key}: expected comma-separated numbers, got {text!r}")
            return None


def _parse(text: str, source: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (L, T, R, A, B)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"parse error: {exc}"]) from None
    return parser


# }}}


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = _parse(text, source)
    c = _Collector(parser)
    errors = c.errors

    for section in parser.sections():
        if section not in DEFAULTS:
            errors.append(f"{section}: unknown section")

    L = c.number("domain", "L", float, lambda v: v > 0, "must be positive")
    n = c.number("domain", "n", int, lambda v: v >= 8 and not v & (v - 1),
                 "must be a power of two >= 8")
    T = c.number("time", "T", float, lambda v: v > 0, "must be positive")
    h = c.number("time", "h", float, lambda v: v > 0, "must be positive")
    snaps = c.float_list("time", "snapshot_times")
    if T is not None and h is not None:
        steps = T / h
        if abs(steps - round(steps)) > 1e-9 * max(steps, 1.0):
            errors.append(f"time.h: T = {T} is not a multiple of h = {h}")
        elif h > T / 8:
            errors.append(f"time.h: need h <= T/8 (got h = {h}, T = {T})")
        for t in snaps or ():
            j = t / h
            if t < 0 or t > T * (1 + 1e-12) or abs(j - round(j)) > 1e-9 * max(j, 1.0):
                errors.append(f"time.snapshot_times: {t} is not on the step grid of [0, T]")

    # nonlinearity
    nsec = "nonlinearity"
    A = c.number(nsec, "A", float)
    B = c.number(nsec, "B", float, lambda v: v > 0, "must be positive")
    name = c.raw(nsec, "name").strip()
    coefficients = None
    if parser.has_option(nsec, "coefficients"):
        coefficients = c.float_list(nsec, "coefficients")
        name = "polynomial"
    elif name not in CATALOGUE:
        errors.append(f"{nsec}.name: unknown nonlinearity {name!r}; expected one of "
                      f"{sorted(CATALOGUE)} or a coefficients list")
    trunc_text = c.raw(nsec, "truncation").strip().lower()
    truncation: str | float = trunc_text
    if trunc_text not in ("none", "auto"):
        truncation = c.number(nsec, "truncation", float, lambda v: v > 0,
                              "must be none, auto or a positive radius")

    # initial data
    kind = c.raw("initial", "kind").strip()
    params = {k: v for k, v in parser.items("initial")} if parser.has_section("initial") else {}
    params.pop("kind", None)
    if kind not in INITIAL_KINDS:
        errors.append(f"initial.kind: expected one of {list(INITIAL_KINDS)}, got {kind!r}")
    else:
        for key in sorted(set(params) - INITIAL_KEYS[kind]):
            errors.append(f"initial.{key}: not a parameter of kind {kind!r}")
        for key, value in params.items():
            if key in ("path",) or (key == "kappa" and value.strip() == "compatible"):
                continue
            if key in INITIAL_KEYS[kind]:
                c.number("initial", key, int if key == "seed" else float)
        if kind == "file" and "path" not in params:
            errors.append("initial.path: required for kind 'file'")

    # study
    eps = c.float_list("study", "epsilons")
    if eps is not None:
        if any(not 0 < e < 1 for e in eps):
            errors.append(f"study.epsilons: values must lie in (0, 1), got {list(eps)}")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            errors.append(f"study.epsilons: must be strictly decreasing, got {list(eps)}")
    R = c.number("study", "R", float, lambda v: v > 0, "must be positive")
    if R is not None and L is not None and not R < L:
        errors.append(f"study.R: window R = {R} must be smaller than L = {L}")
    tau = None
    if c.raw("study", "tau").strip():
        tau = c.number("study", "tau", float, lambda v: v > 0, "must be positive")

    # output
    formats = tuple(f.strip() for f in c.raw("output", "formats").split(",") if f.strip())
    for f in formats:
        if f not in OUTPUT_FORMATS:
            errors.append(f"output.formats: unknown format {f!r}; expected {list(OUTPUT_FORMATS)}")
    out_dir = c.raw("output", "dir").strip() or "out"

    if errors:
        raise ConfigError(errors)
    return RunConfig(
        domain=DomainConfig(L, n),
        time=TimeConfig(T, h, tuple(snaps)),
        nonlinearity=NonlinearityConfig(name, coefficients, A, B, truncation),
        initial=InitialConfig(kind, params),
        study=StudyConfig(tuple(eps), R, tau),
        output=OutputConfig(out_dir, formats),
        source=source,
        sha256=hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from None
    return parse_config(text, str(path))


# {{{ building objects from a config


def base_nonlinearity(cfg: RunConfig) -> Nonlinearity:
    nc = cfg.nonlinearity
    if nc.coefficients is not None:
        return polynomial(nc.coefficients, A=nc.A, B=nc.B)
    return get_nonlinearity(nc.name, A=nc.A, B=nc.B)


def build_initial(cfg: RunConfig, nl: Nonlinearity | None = None,
                  seed: int | None = None) -> Wavefunction:
    """Initial field on the config grid; ``seed`` overrides ``initial.seed``."""
    from . import initial
    from .io import read_snapshot

    grid = cfg.grid
    p = cfg.initial.params
    kind = cfg.initial.kind

    def num(key: str, default: float) -> float:
        return float(p[key]) if key in p else default

    if kind == "gaussian":
        return initial.gaussian(grid, num("amplitude", 1.0), num("width", 1.0),
                                num("center", 0.0), num("k0", 0.0))
    if kind == "exp_kink":
        amplitude = num("amplitude", 1.0)
        if p.get("kappa", "").strip() == "compatible":
            kappa = initial.compatible_kappa(nl or base_nonlinearity(cfg), amplitude)
        else:
            kappa = num("kappa", 1.0)
        return initial.exp_kink(grid, amplitude, kappa, num("bump", 0.0))
    if kind == "rough":
        s = seed if seed is not None else int(num("seed", 0))
        return initial.rough(grid, s, num("exponent", 0.8), num("envelope", 8.0),
                             num("charge", 0.5))
    path = Path(p["path"])
    if not path.is_absolute() and cfg.source is not None:
        path = Path(cfg.source).parent / path
    psi, _ = read_snapshot(path)
    if psi.grid != grid:
        raise ConfigError([f"initial.path: snapshot grid {psi.grid} does not match "
                           f"domain L = {grid.L}, n = {grid.n}"])
    return psi


def build_nonlinearity(cfg: RunConfig, phi: Wavefunction) -> Nonlinearity:
    """Base nonlinearity, truncated as configured; ``auto`` uses the a priori bound."""
    from .diagnostics import charge, energy_point, lambda_bound
    from .model import truncate_nonlinearity

    nl = base_nonlinearity(cfg)
    trunc = cfg.nonlinearity.truncation
    if trunc == "none":
        return nl
    lam = lambda_bound(nl, charge(phi), energy_point(phi, nl)) if trunc == "auto" else float(trunc)
    if lam == 0:
        return nl
    return truncate_nonlinearity(nl, lam)


# }}}
