"""Scenario configuration: flat ``key = value`` text with dotted sections.

Example::

    lattice.dims = 256
    lattice.h = 1.0
    lattice.boundary = periodic
    initial.kind = gaussian
    initial.center = 0
    initial.width = 8
    potential.kind = zero
    step.dt = 0.1
    run.mode = meanfield
    run.duration = 20
    run.seed = 1
    output.every = 10

Lines starting with ``#`` and blank lines are ignored.  Parse errors name
the offending line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import PotentialField, StepParams
from .errors import ConfigError
from .frames import read_frame
from .lattice import FieldGrid, LatticeSpec, relax_to_green
from .oracle import ComplexField

MODES = ("meanfield", "stochastic", "oracle")
INITIAL_KINDS = ("delta", "gaussian", "plane_wave", "file")
POTENTIAL_KINDS = ("zero", "harmonic", "box", "coulomb_relaxed", "file")


def parse_config(text: str, name: str = "<config>") -> dict[str, str]:
    """Parse the flat key = value format into a dict."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{name}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"{name}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{name}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


@dataclass
class Scenario:
    """A fully parsed simulation scenario."""

    lattice: LatticeSpec
    initial_kind: str
    initial_params: dict
    potential_kind: str
    potential_params: dict
    step: StepParams
    mode: str
    seed: int
    steps: int
    samples: int
    output_every: int
    output_types: bool = False
    output_pgm: bool = False
    raw: dict = field(default_factory=dict)


class _Reader:
    """Typed access to the flat key dict, tracking unknown keys."""

    def __init__(self, cfg: dict[str, str], name: str):
        self.cfg = cfg
        self.name = name
        self.used: set[str] = set()

    def _raw(self, key, default=None, required=False):
        if key in self.cfg:
            self.used.add(key)
            return self.cfg[key]
        if required:
            raise ConfigError(f"{self.name}: missing required key {key!r}")
        return default

    def get(self, key, default=None, required=False):
        return self._raw(key, default, required)

    def get_float(self, key, default=None, required=False):
        v = self._raw(key, default, required)
        if v is None or isinstance(v, (int, float)):
            return v
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{self.name}: key {key!r}: expected a number, got {v!r}")

    def get_int(self, key, default=None, required=False):
        v = self.get_float(key, default, required)
        return None if v is None else int(round(v))

    def get_bool(self, key, default=False):
        v = self._raw(key, None)
        if v is None:
            return default
        if v.lower() in ("true", "yes", "1", "on"):
            return True
        if v.lower() in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{self.name}: key {key!r}: expected a boolean, got {v!r}")

    def get_floats(self, key, default=None):
        v = self._raw(key, None)
        if v is None:
            return default
        try:
            return tuple(float(x) for x in v.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"{self.name}: key {key!r}: expected numbers, got {v!r}")

    def get_choice(self, key, choices, default=None, required=False):
        v = self._raw(key, default, required)
        if v is not None and v not in choices:
            raise ConfigError(
                f"{self.name}: key {key!r}: expected one of {choices}, got {v!r}"
            )
        return v

    def check_unknown(self):
        unknown = set(self.cfg) - self.used
        if unknown:
            raise ConfigError(
                f"{self.name}: unknown key(s): {', '.join(sorted(unknown))}"
            )


def load_scenario(text: str, name: str = "<config>") -> Scenario:
    cfg = parse_config(text, name)
    r = _Reader(cfg, name)

    dims = r.get_floats("lattice.dims")
    if dims is None:
        raise ConfigError(f"{name}: missing required key 'lattice.dims'")
    spec = LatticeSpec(
        tuple(int(d) for d in dims),
        h=r.get_float("lattice.h", 1.0),
        boundary=r.get("lattice.boundary", "periodic"),
    )

    initial_kind = r.get_choice("initial.kind", INITIAL_KINDS, required=True)
    initial_params = {
        "center": r.get_floats("initial.center", (0.0,) * spec.ndim),
        "width": r.get_float("initial.width", 4.0),
        "momentum": r.get_floats("initial.momentum", (0.0,) * spec.ndim),
        "file": r.get("initial.file"),
    }

    potential_kind = r.get_choice("potential.kind", POTENTIAL_KINDS, default="zero")
    potential_params = {
        "strength": r.get_float("potential.strength", 1.0),
        "width": r.get_float("potential.width"),
        "v0": r.get_float("potential.v0", 0.0),
        "charge": r.get_float("potential.charge", 1.0),
        "stay_prob": r.get_float("potential.stay_prob", 0.5),
        "relax_steps": r.get_int("potential.relax_steps", 20000),
        "file": r.get("potential.file"),
    }

    step = StepParams(
        dt=r.get_float("step.dt", required=True),
        p_phot=r.get_float("step.p_phot", 1.0),
        r_emit=r.get_float("step.r_emit"),
        dt_phot=r.get_float("step.dt_phot"),
        drift_rule=r.get_bool("step.drift_rule", False),
        A=r.get_float("step.A"),
        mass=r.get_float("step.mass", 0.5),
        max_population=r.get_float("step.max_population"),
        phase_compensation=r.get_bool("step.phase_compensation", True),
    )

    mode = r.get_choice("run.mode", MODES, default="meanfield")
    duration = r.get_float("run.duration")
    steps = r.get_int("run.steps")
    if steps is None:
        steps = 0 if duration is None else int(round(duration / step.dt))

    scenario = Scenario(
        lattice=spec,
        initial_kind=initial_kind,
        initial_params=initial_params,
        potential_kind=potential_kind,
        potential_params=potential_params,
        step=step,
        mode=mode,
        seed=r.get_int("run.seed", 0),
        steps=steps,
        samples=r.get_int("run.samples", 100000),
        output_every=r.get_int("output.every", 1),
        output_types=r.get_bool("output.types", False),
        output_pgm=r.get_bool("output.pgm", False),
        raw=cfg,
    )
    r.used.add("run.duration")
    r.check_unknown()
    return scenario


def load_scenario_file(path) -> Scenario:
    with open(path) as fh:
        return load_scenario(fh.read(), name=str(path))


def build_initial(s: Scenario) -> ComplexField:
    """The scenario's initial wave function, L2-normalized."""
    spec = s.lattice
    kind = s.initial_kind
    p = s.initial_params
    if kind == "file":
        if not p["file"]:
            raise ConfigError("initial.kind = file needs initial.file")
        fr = read_frame(p["file"])
        if fr.dims != spec.dims:
            raise ConfigError(
                f"initial file dims {fr.dims} do not match lattice {spec.dims}"
            )
        psi = fr.values.astype(complex)
    elif kind == "delta":
        psi = np.zeros(spec.dims, dtype=complex)
        idx = tuple(
            int(round(c / spec.h + (n - 1) / 2.0))
            for c, n in zip(p["center"], spec.dims)
        )
        psi[idx] = 1.0
    elif kind == "gaussian":
        psi = np.ones(spec.dims, dtype=complex)
        for axis in range(spec.ndim):
            x = spec.coordinates(axis)
            shape = [1] * spec.ndim
            shape[axis] = -1
            g = np.exp(
                -((x - p["center"][axis]) ** 2) / (4.0 * p["width"] ** 2)
                + 1j * p["momentum"][axis] * x
            )
            psi = psi * g.reshape(shape)
    elif kind == "plane_wave":
        psi = np.ones(spec.dims, dtype=complex)
        for axis in range(spec.ndim):
            x = spec.coordinates(axis)
            shape = [1] * spec.ndim
            shape[axis] = -1
            psi = psi * np.exp(1j * p["momentum"][axis] * x).reshape(shape)
    else:  # pragma: no cover
        raise ConfigError(f"unknown initial kind {kind!r}")
    n = np.linalg.norm(psi)
    if n == 0:
        raise ConfigError("initial wave function is identically zero")
    return ComplexField(spec, psi / n)


def build_potential(s: Scenario) -> PotentialField:
    spec = s.lattice
    kind = s.potential_kind
    p = s.potential_params
    if kind == "zero":
        return PotentialField.zero(spec)
    if kind == "file":
        if not p["file"]:
            raise ConfigError("potential.kind = file needs potential.file")
        fr = read_frame(p["file"])
        if fr.dims != spec.dims:
            raise ConfigError(
                f"potential file dims {fr.dims} do not match lattice {spec.dims}"
            )
        return PotentialField(FieldGrid(spec, fr.values))
    if kind == "harmonic":
        v = np.zeros(spec.dims)
        for axis in range(spec.ndim):
            x = spec.coordinates(axis)
            shape = [1] * spec.ndim
            shape[axis] = -1
            v = v + (x**2).reshape(shape)
        return PotentialField(FieldGrid(spec, p["strength"] * v))
    if kind == "box":
        # flat well of the given full width around the center, walls at v0
        width = p["width"] if p["width"] is not None else min(spec.dims) * spec.h / 2
        inside = np.ones(spec.dims, dtype=bool)
        for axis in range(spec.ndim):
            x = spec.coordinates(axis)
            shape = [1] * spec.ndim
            shape[axis] = -1
            inside = inside & (np.abs(x) <= width / 2).reshape(shape)
        return PotentialField(FieldGrid(spec, np.where(inside, 0.0, p["v0"])))
    if kind == "coulomb_relaxed":
        source = np.zeros(spec.dims)
        source[tuple(n // 2 for n in spec.dims)] = 1.0
        res = relax_to_green(
            FieldGrid(spec, source),
            FieldGrid(spec),
            p["stay_prob"],
            p["relax_steps"],
        )
        g = res.field.values
        return PotentialField(FieldGrid(spec, -p["charge"] * g))
    raise ConfigError(f"unknown potential kind {kind!r}")  # pragma: no cover
