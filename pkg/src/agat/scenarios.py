"""Scenario fixtures, the flat config format, and CSV emission.

Five built-in regression scenarios exercise the tracking controller on two
pendubot plants: s1/s2 track a uniformly rotating elbow reference from two
different starts, s3 stabilizes the upright elbow configuration, s4 tracks
a reference running half a turn out of phase, and s5 repeats s2 on a
second plant.

Hinge inertias of the fixtures are ``i_k = 4 m_k l_k^2``, a geared-drive
scale chosen so that (a) the elbow coupling ``K2 = 2 i2 + m2 l1 l2
cos(th2)`` stays bounded away from zero at every elbow angle the torque
law divides by it and references sweep the full circle and (b) the
shoulder rate stays well bounded along all fixtures.  With bare-rod
inertias ``m l^2 / 3`` the coupling crosses zero on the tracking path and
no finite torque can hold the error; with inertias below roughly
``3 m l^2`` the shoulder rate escapes in finite time under these gains.
Both effects are demonstrated in the test suite.

Config files are flat ``section.key = value`` text; matrices are row-major
comma lists; angles are radians.  Serializing uses ``repr`` floats, so a
round trip through the format is exact and files diff cleanly.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import so2
from .integrate import IntegratorSpec, TrackingProbes, TrajectoryRecord, \
    simulate
from .pendubot import PendubotParams, PendubotState
from .tracking import GainSet, ReferenceTrajectory, tracking_torque

__all__ = [
    "RefSpec",
    "Scenario",
    "builtin_scenarios",
    "serialize_scenario",
    "parse_scenario",
    "apply_overrides",
    "run_scenario",
    "write_csv",
    "CSV_HEADER",
]

CSV_HEADER = "t,R2_11,R2_12,Rref_11,Rref_12,E_11,u1,omega1,omega2,psi,E_cl,energy"


@dataclass(frozen=True)
class RefSpec:
    """Serializable reference descriptor.

    ``spin``: uniform rotation at ``rate`` with initial ``phase``.
    ``hold``: constant rotation at ``phase`` (rate must be zero).
    """

    kind: str
    rate: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("spin", "hold"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.kind == "hold" and self.rate != 0.0:
            raise ValueError("hold references have zero rate")
        object.__setattr__(self, "rate", float(self.rate))
        object.__setattr__(self, "phase", float(self.phase))

    def build(self) -> ReferenceTrajectory:
        if self.kind == "spin":
            return ReferenceTrajectory.constant_rate(self.rate, self.phase)
        return ReferenceTrajectory.hold(self.phase)


@dataclass(frozen=True)
class Scenario:
    """A complete, reproducible simulation fixture."""

    name: str
    params: PendubotParams
    initial: PendubotState
    ref: RefSpec
    gains: GainSet
    spec: IntegratorSpec

    def probes(self) -> TrackingProbes:
        return TrackingProbes(self.ref.build(), self.gains)


def _fixture_params(m1, m2, l1, l2) -> PendubotParams:
    # geared hinges: see module docstring for why 4*m*l^2
    return PendubotParams(m1, m2, l1, l2,
                          4.0 * m1 * l1 * l1, 4.0 * m2 * l2 * l2)


def _fixture_state(r2_raw, w1, w2) -> PendubotState:
    r2 = so2.project_rotation(np.asarray(r2_raw, dtype=float))
    return PendubotState(so2.identity(), r2, w1, w2)


def builtin_scenarios() -> dict[str, Scenario]:
    """The five regression fixtures, keyed by name."""
    plant_a = _fixture_params(0.25, 0.2, 0.5, 0.5)
    plant_b = _fixture_params(0.1, 0.4, 0.25, 0.5)
    tilted = [[0.4794, 0.87758], [-0.87758, 0.4794]]
    quarter = [[0.0, 1.0], [-1.0, 0.0]]
    spec = IntegratorSpec(dt=1e-3, t_end=60.0, record_stride=1)

    scenarios = [
        Scenario("s1", plant_a, _fixture_state(tilted, -1.0, 2.0),
                 RefSpec("spin", 1.0, math.pi / 4),
                 GainSet.diagonal(2.3, (-1.5, -2.0), (1.0, 1.5)), spec),
        Scenario("s2", plant_a, _fixture_state(quarter, -1.0, 2.0),
                 RefSpec("spin", 1.0, 0.0),
                 GainSet.diagonal(3.0, (-1.5, -2.0), (2.0, 1.5)), spec),
        # s3: s2's start, constant identity reference (stabilization)
        Scenario("s3", plant_a, _fixture_state(quarter, -1.0, 2.0),
                 RefSpec("hold", 0.0, 0.0),
                 GainSet.diagonal(3.0, (-1.5, -2.0), (2.0, 1.5)), spec),
        # s4: same start as s1, reference half a turn out of phase
        Scenario("s4", plant_a, _fixture_state(tilted, -1.0, 2.0),
                 RefSpec("spin", 1.0, math.pi),
                 GainSet.diagonal(2.5, (-1.5, -2.2), (2.0, 1.5)), spec),
        Scenario("s5", plant_b, _fixture_state(quarter, -1.0, 2.0),
                 RefSpec("spin", 1.0, 0.0),
                 GainSet.diagonal(5.0, (-1.5, -2.5), (1.5, 1.3)), spec),
    ]
    return {s.name: s for s in scenarios}


# --- config format ---------------------------------------------------------

def _fmt_matrix(a: np.ndarray) -> str:
    return ",".join(repr(float(x)) for x in np.asarray(a).ravel())


def serialize_scenario(s: Scenario) -> str:
    out = io.StringIO()
    w = out.write
    w(f"name = {s.name}\n")
    for key in ("m1", "m2", "l1", "l2", "i1", "i2", "g"):
        w(f"params.{key} = {getattr(s.params, key)!r}\n")
    w(f"initial.r1 = {_fmt_matrix(s.initial.r1)}\n")
    w(f"initial.r2 = {_fmt_matrix(s.initial.r2)}\n")
    w(f"initial.w1 = {s.initial.w1!r}\n")
    w(f"initial.w2 = {s.initial.w2!r}\n")
    w(f"ref.kind = {s.ref.kind}\n")
    w(f"ref.rate = {s.ref.rate!r}\n")
    w(f"ref.phase = {s.ref.phase!r}\n")
    w(f"gains.kp = {s.gains.kp!r}\n")
    w(f"gains.fd = {_fmt_matrix(s.gains.fd)}\n")
    w(f"gains.p = {_fmt_matrix(s.gains.p)}\n")
    w(f"integrator.dt = {s.spec.dt!r}\n")
    w(f"integrator.t_end = {s.spec.t_end!r}\n")
    w(f"integrator.stride = {s.spec.record_stride}\n")
    return out.getvalue()


def _parse_matrix(text: str) -> np.ndarray:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 4:
        raise ValueError(f"expected 4 matrix entries, got {len(vals)}")
    return np.array(vals).reshape(2, 2)


def parse_scenario(text: str) -> Scenario:
    """Parse the flat key-value format produced by :func:`serialize_scenario`."""
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, val = line.split("=", 1)
        kv[key.strip()] = val.strip()

    def need(key: str) -> str:
        if key not in kv:
            raise ValueError(f"missing config key {key!r}")
        return kv[key]

    params = PendubotParams(*(float(need(f"params.{k}"))
                              for k in ("m1", "m2", "l1", "l2", "i1", "i2", "g")))
    initial = PendubotState(_parse_matrix(need("initial.r1")),
                            _parse_matrix(need("initial.r2")),
                            float(need("initial.w1")),
                            float(need("initial.w2")))
    ref = RefSpec(need("ref.kind"), float(need("ref.rate")),
                  float(need("ref.phase")))
    gains = GainSet(float(need("gains.kp")), _parse_matrix(need("gains.fd")),
                    _parse_matrix(need("gains.p")))
    spec = IntegratorSpec(float(need("integrator.dt")),
                          float(need("integrator.t_end")),
                          int(need("integrator.stride")))
    return Scenario(need("name"), params, initial, ref, gains, spec)


def apply_overrides(s: Scenario, dt: Optional[float] = None,
                    t_end: Optional[float] = None,
                    stride: Optional[int] = None,
                    kp: Optional[float] = None,
                    fd: Optional[tuple] = None,
                    p: Optional[tuple] = None) -> Scenario:
    """Return a copy with command-line overrides applied.

    ``fd`` takes the positive magnitudes (a, b) and installs the
    dissipation matrix ``-diag(a, b)``, matching how the fixture gains are
    tabulated; ``p`` takes the diagonal (c1, c2) directly.
    """
    spec = IntegratorSpec(dt if dt is not None else s.spec.dt,
                          t_end if t_end is not None else s.spec.t_end,
                          stride if stride is not None else s.spec.record_stride)
    gains = s.gains
    if kp is not None or fd is not None or p is not None:
        gains = GainSet(
            kp if kp is not None else s.gains.kp,
            -np.diag(np.asarray(fd, dtype=float)) if fd is not None else s.gains.fd,
            np.diag(np.asarray(p, dtype=float)) if p is not None else s.gains.p)
    return replace(s, gains=gains, spec=spec)


# --- running and CSV emission ----------------------------------------------

def run_scenario(s: Scenario) -> TrajectoryRecord:
    """Integrate the closed loop of one scenario with probes attached."""
    ref = s.ref.build()
    gains, params = s.gains, s.params

    def torque(state, t):
        return tracking_torque(state, ref, t, gains, params)

    return simulate(s.initial, torque, s.spec, params,
                    probes=s.probes())


def write_csv(record: TrajectoryRecord, path: str) -> None:
    """Emit the trajectory as plain CSV (schema in ``CSV_HEADER``).

    Floats are written with ``repr``, so identical runs produce identical
    bytes and all written digits round-trip.
    """
    if record.rref is None:
        raise ValueError("record has no reference probes; cannot emit CSV")
    lines = [CSV_HEADER]
    for k in range(len(record)):
        r2 = record.r2[k]
        rref = record.rref[k]
        e11 = rref[0, 0] * r2[0, 0] + rref[0, 1] * r2[0, 1]  # (Rref R2')_11
        row = (record.t[k], r2[0, 0], r2[0, 1], rref[0, 0], rref[0, 1], e11,
               record.torque[k], record.w1[k], record.w2[k], record.psi[k],
               record.e_cl[k], record.energy[k])
        lines.append(",".join(repr(float(x)) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
