"""Discrete-sample (swarm) representation of a quantum particle.

A particle is represented by four per-cell count fields, one per sample
type.  Types are numbered 1..4 = (+,r), (+,i), (-,r), (-,i); type arithmetic
is cyclic mod 4.  The complex wave function encoded by a swarm is

    psi = (s1 - s3) + i*(s2 - s4),

up to the stored samples-per-unit-amplitude scale and a global L2
normalization.  Samples are stored in aggregated (per-cell count) form;
individual :class:`Sample` records exist only for APIs that need per-sample
parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from enum import IntEnum

import numpy as np

from .errors import DomainError, EmptyCellError, EmptySwarmError
from .lattice import FieldGrid, LatticeSpec


class SampleType(IntEnum):
    PLUS_R = 1
    PLUS_I = 2
    MINUS_R = 3
    MINUS_I = 4

    @property
    def sign(self) -> int:
        return +1 if self in (SampleType.PLUS_R, SampleType.PLUS_I) else -1

    @property
    def part(self) -> str:
        return "r" if self in (SampleType.PLUS_R, SampleType.MINUS_R) else "i"

    def successor(self) -> "SampleType":
        """Cyclic shift 1 -> 2 -> 3 -> 4 -> 1."""
        return SampleType(self % 4 + 1)

    def negate(self) -> "SampleType":
        """Sign flip: shift by two."""
        return self.successor().successor()


@dataclass
class Sample:
    """One classical sample of a quantum particle."""

    particle: str
    type: SampleType
    cell: tuple[int, ...]
    tag: dict | None = None


@dataclass
class PhotonCohort:
    """Connected-photon samples emitted in one step, tracked until conversion.

    ``counts`` holds per-type per-cell photon counts.  ``pending`` holds the
    paired anti-samples created together with the photons (rule-1 pair
    creation); they are deposited into the particle fields at conversion
    time so that the expected net deposit is purely the diffusive part of
    the photon transport.  ``velocity`` optionally freezes the mean sample
    velocity of the emitting cells.
    """

    counts: np.ndarray  # (4, *dims)
    pending: np.ndarray  # (4, *dims)
    age: int = 0
    velocity: np.ndarray | None = None  # (ndim, *dims)

    def population(self) -> float:
        return float(self.counts.sum())


@dataclass
class SwarmState:
    """Full simulation state: per-particle four-type fields plus photons."""

    spec: LatticeSpec
    fields: dict[str, np.ndarray] = dc_field(default_factory=dict)
    photons: dict[str, list[PhotonCohort]] = dc_field(default_factory=dict)
    scale: dict[str, float] = dc_field(default_factory=dict)
    vel_sum: dict[str, np.ndarray] = dc_field(default_factory=dict)
    vel_count: dict[str, np.ndarray] = dc_field(default_factory=dict)
    internal: dict[str, object] = dc_field(default_factory=dict)
    time: float = 0.0

    def particles(self) -> list[str]:
        return list(self.fields)

    def add_particle(self, pid: str, counts: np.ndarray, scale: float) -> None:
        counts = np.asarray(counts, dtype=float)
        if counts.shape != (4, *self.spec.dims):
            raise DomainError(
                f"counts shape {counts.shape} does not match (4, {self.spec.dims})"
            )
        if np.any(counts < 0):
            raise DomainError("count fields must be non-negative")
        if not scale > 0:
            raise DomainError("scale must be positive")
        self.fields[pid] = counts
        self.scale[pid] = float(scale)
        self.photons.setdefault(pid, [])

    def remove_particle(self, pid: str) -> None:
        for d in (self.fields, self.photons, self.scale, self.vel_sum,
                  self.vel_count, self.internal):
            d.pop(pid, None)

    def population(self, pid: str | None = None) -> float:
        """Total sample count (particles plus photons)."""
        pids = [pid] if pid is not None else self.particles()
        tot = 0.0
        for p in pids:
            tot += float(self.fields[p].sum())
            tot += sum(c.population() for c in self.photons.get(p, []))
        return tot

    def copy(self) -> "SwarmState":
        out = SwarmState(self.spec, time=self.time)
        out.fields = {k: v.copy() for k, v in self.fields.items()}
        out.photons = {
            k: [
                PhotonCohort(
                    c.counts.copy(),
                    c.pending.copy(),
                    c.age,
                    None if c.velocity is None else c.velocity.copy(),
                )
                for c in v
            ]
            for k, v in self.photons.items()
        }
        out.scale = dict(self.scale)
        out.vel_sum = {k: v.copy() for k, v in self.vel_sum.items()}
        out.vel_count = {k: v.copy() for k, v in self.vel_count.items()}
        out.internal = dict(self.internal)
        return out


def reconstruct_wavefunction(s: SwarmState, pid: str = "p0"):
    """Complex wave function encoded by a swarm, globally L2-normalized.

    Returns (psi, norm) where ``norm`` is the L2 norm of the raw
    (scale-divided) field before normalization.
    """
    f = s.fields[pid]
    raw = ((f[0] - f[2]) + 1j * (f[1] - f[3])) / s.scale[pid]
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        raise EmptySwarmError(f"particle {pid!r}: empty swarm")
    return raw / norm, norm


def cancel_pairs(s: SwarmState) -> SwarmState:
    """Annihilate opposite-sign pairs per cell and per (r/i) part.

    Leaves the reconstructed wave function exactly unchanged; afterwards
    min(s1,s3) = min(s2,s4) = 0 in every cell.
    """
    out = s.copy()
    for pid, f in out.fields.items():
        m = np.minimum(f[0], f[2])
        f[0] -= m
        f[2] -= m
        m = np.minimum(f[1], f[3])
        f[1] -= m
        f[3] -= m
    return out


def _stochastic_round(x: np.ndarray, rng) -> np.ndarray:
    lo = np.floor(x)
    return lo + (rng.random(x.shape) < (x - lo))


def swarm_budget(s: SwarmState, pid: str, A: float) -> float:
    """Target population A * sum_cells |psi| for the normalized wave function."""
    psi, _ = reconstruct_wavefunction(s, pid)
    return A * float(np.abs(psi).sum())


def resample(s: SwarmState, A: float, rng, deterministic: bool = False) -> SwarmState:
    """Rescale sample populations to the A*|psi| memory budget.

    Cancels pairs, then multiplies every surviving count by one global
    factor (stochastic rounding) so the total population matches the
    budget; the expected reconstructed wave function is unchanged and the
    scale is updated consistently.
    """
    if not A > 0:
        raise DomainError("memory constant A must be positive")
    out = cancel_pairs(s)
    for pid in out.particles():
        f = out.fields[pid]
        current = f.sum()
        if current == 0:
            continue
        target = swarm_budget(out, pid, A)
        factor = target / current
        scaled = f * factor
        out.fields[pid] = scaled if deterministic else _stochastic_round(scaled, rng)
        out.scale[pid] *= factor
    return out


def sample_from_wavefunction(
    psi: np.ndarray,
    spec: LatticeSpec,
    K: int,
    rng,
    pid: str = "p0",
    deterministic: bool = False,
    momentum_tags: bool = False,
    mass: float = 0.5,
) -> SwarmState:
    """Draw a K-sample swarm whose expected reconstruction is ``psi``.

    Samples are multinomially distributed over (cell, real/imaginary
    channel) proportionally to |Re psi| + |Im psi|; the channel sign picks
    the sample type.  ``deterministic`` stores the exact expected
    (fractional) counts instead of drawing.  ``momentum_tags`` attaches the
    local phase-gradient velocity grad(phase)/mass as per-cell velocity
    tags.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != spec.dims:
        raise DomainError(f"psi shape {psi.shape} does not match lattice {spec.dims}")
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-6:
        raise DomainError(f"psi must be L2-normalized, got norm {nrm}")
    if K < 1:
        raise DomainError("sample count K must be >= 1")

    re = psi.real.ravel()
    im = psi.imag.ravel()
    weights = np.concatenate([np.abs(re), np.abs(im)])
    W = weights.sum()
    expected = K * weights / W
    if deterministic:
        counts = expected
    else:
        counts = rng.multinomial(K, weights / W).astype(float)
    n = psi.size
    cr, ci = counts[:n], counts[n:]

    f = np.zeros((4, *spec.dims))
    f[0] = np.where(re >= 0, cr, 0.0).reshape(spec.dims)
    f[2] = np.where(re < 0, cr, 0.0).reshape(spec.dims)
    f[1] = np.where(im >= 0, ci, 0.0).reshape(spec.dims)
    f[3] = np.where(im < 0, ci, 0.0).reshape(spec.dims)

    out = SwarmState(spec)
    out.add_particle(pid, f, scale=K / W)
    if momentum_tags:
        grad = phase_gradient(psi, spec)
        count = f.sum(axis=0)
        out.vel_sum[pid] = grad / mass * count
        out.vel_count[pid] = count
    return out


def phase_gradient(psi: np.ndarray, spec: LatticeSpec) -> np.ndarray:
    """Per-cell phase gradient of psi, shape (ndim, *dims).

    Uses a phase-unwrapped central difference; cells with negligible
    amplitude get zero.
    """
    grad = np.zeros((spec.ndim, *spec.dims))
    amp = np.abs(psi)
    ok = amp > 1e-12 * max(amp.max(), 1e-300)
    for axis in range(spec.ndim):
        fwd = np.roll(psi, -1, axis=axis)
        bwd = np.roll(psi, +1, axis=axis)
        # angle of ratio = unwrapped local phase increment
        dphi = 0.5 * (np.angle(fwd * np.conj(psi)) + np.angle(psi * np.conj(bwd)))
        grad[axis] = np.where(ok, dphi / spec.h, 0.0)
    return grad


def mean_velocity(s: SwarmState, pid: str, cell: tuple[int, ...]) -> np.ndarray:
    """Average velocity tag of the samples in a cell; zeros if tags are absent."""
    idx = tuple(int(c) for c in cell)
    if s.fields[pid][(slice(None), *idx)].sum() == 0:
        raise EmptyCellError(f"cell {cell} holds no samples of {pid!r}")
    if pid not in s.vel_count or s.vel_count[pid][idx] == 0:
        return np.zeros(s.spec.ndim)
    return np.array([s.vel_sum[pid][(ax, *idx)] for ax in range(s.spec.ndim)]) / s.vel_count[pid][idx]


def type_fields(s: SwarmState, pid: str) -> list[FieldGrid]:
    """The four count fields of a particle as FieldGrid values."""
    return [FieldGrid(s.spec, s.fields[pid][j].copy()) for j in range(4)]
