"""Concrete-instance simulator and experiment harness for the intersection.

An *instance* fixes the initial distances to the collision-zone (CZ)
center and the initial speeds of both vehicles; a *behavior* fixes the
POV's constant acceleration before its reaction.  The SV always executes
the proper response (cruise for ρ, then brake at b until stopped); the
POV follows its behavior until exactly ρ seconds after the SV first
occupies the CZ, then brakes at b.  A collision is a joint occupancy of
the CZ.

Two engines agree on this semantics:

* :func:`simulate` integrates one instance step by step, bisecting every
  CZ-boundary crossing and scheduling the POV brake onset at the bisected
  SV entry time plus exactly ρ.
* :func:`run_grid` labels the full experiment grid using closed-form
  per-segment kinematics (both vehicles move with piecewise-constant
  acceleration, so entry/exit times are roots of quadratics).  This keeps
  the 23,328-simulation sweep exact, fast, and trivially independent of
  the step size and of worker scheduling; the step engine cross-checks it
  in the test suite.

Instance positions are distances to the CZ center measured along each
vehicle's own lane, so a vehicle at instance position x starts at lane
coordinate −x and the CZ is the lane interval [−L/2, +L/2].
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import smt
from .programs import SimCfg
from .scenarios import IntersectionParams
from .symbolic import (
    Assertion,
    QuantifiedEvaluationError,
    Term,
    satisfies,
    substitute,
)

CONDITION_VARS = ("x_SV", "v_SV", "x_POV", "v_POV")


def lane_coordinate(distance_to_cz: float) -> float:
    """Instance positions count down toward the CZ; lane coordinates count up."""
    return -float(distance_to_cz)


# ---------------------------------------------------------------------------
# Instances, behaviors, outcomes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    """Initial condition: distances to the CZ center and speeds, SI units."""

    x_sv: float
    v_sv: float
    x_pov: float
    v_pov: float

    def __post_init__(self):
        for name in ("x_sv", "v_sv", "x_pov", "v_pov"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.v_sv < 0 or self.v_pov < 0:
            raise ValueError("speeds must be nonnegative")


@dataclass(frozen=True)
class Behavior:
    """The POV's constant acceleration before its reaction."""

    a_pov: float

    def validate(self, p: IntersectionParams) -> None:
        if not (-float(p.b) <= self.a_pov <= float(p.a_max)):
            raise ValueError(
                f"a_pov={self.a_pov} outside the modeled envelope "
                f"[{-float(p.b)}, {float(p.a_max)}]"
            )


@dataclass(frozen=True)
class SimOutcome:
    collision: bool
    t_collision: float | None = None
    horizon_exceeded: bool = False
    sv_window: tuple = (None, None)  # (entry, exit) times of CZ occupancy
    pov_window: tuple = (None, None)
    trace: tuple = ()


# ---------------------------------------------------------------------------
# Closed-form kinematics
# ---------------------------------------------------------------------------
#
# A Motion is a list of (t0, s0, v0, a) segments, each valid from t0 to the
# next segment's start (the last one forever).  Speeds never go negative, so
# positions are nondecreasing and first-passage times are well defined.


def _seg_pos(t0: float, s0: float, v0: float, a: float, t: float) -> float:
    dt = t - t0
    return s0 + v0 * dt + 0.5 * a * dt * dt


def _first_passage(seg, t_end: float | None, target: float) -> float | None:
    """Earliest time within one segment at which position reaches target."""
    t0, s0, v0, a = seg
    if s0 >= target:
        return t0
    gap = target - s0
    if a == 0.0:
        if v0 <= 0.0:
            return None
        t = t0 + gap / v0
    else:
        disc = v0 * v0 + 2.0 * a * gap
        if disc < 0.0:
            return None
        root = math.sqrt(disc)
        # smallest positive dt among the two roots
        cands = [(-v0 + root) / a, (-v0 - root) / a]
        dts = [dt for dt in cands if dt >= 0.0]
        if not dts:
            return None
        t = t0 + min(dts)
    if t_end is not None and t > t_end:
        return None
    return t


class Motion:
    """Piecewise constant-acceleration motion with nonnegative speed."""

    def __init__(self, segments: Sequence[tuple]):
        self.segments = list(segments)

    def pos(self, t: float) -> float:
        seg = self.segments[0]
        for nxt in self.segments[1:]:
            if t < nxt[0]:
                break
            seg = nxt
        return _seg_pos(*seg, t)

    def vel(self, t: float) -> float:
        seg = self.segments[0]
        for nxt in self.segments[1:]:
            if t < nxt[0]:
                break
            seg = nxt
        t0, _, v0, a = seg
        return max(0.0, v0 + a * (t - t0))

    def time_to_reach(self, target: float) -> float | None:
        for i, seg in enumerate(self.segments):
            t_end = self.segments[i + 1][0] if i + 1 < len(self.segments) else None
            t = _first_passage(seg, t_end, target)
            if t is not None:
                return t
        return None


def _braking_tail(t0: float, s0: float, v0: float, b: float) -> list:
    """Segments for braking at b from (t0, s0, v0) down to a permanent stop."""
    if v0 <= 0.0:
        return [(t0, s0, 0.0, 0.0)]
    t_stop = t0 + v0 / b
    s_stop = s0 + v0 * v0 / (2.0 * b)
    return [(t0, s0, v0, -b), (t_stop, s_stop, 0.0, 0.0)]


def sv_motion(inst: Instance, p: IntersectionParams) -> Motion:
    rho, b = float(p.rho), float(p.b)
    s0, v = lane_coordinate(inst.x_sv), float(inst.v_sv)
    segs = [(0.0, s0, v, 0.0)] if rho > 0.0 else []
    segs += _braking_tail(rho, s0 + v * rho, v, b)
    return Motion(segs)


def pov_motion(inst: Instance, beh: Behavior, p: IntersectionParams,
               t_brake: float) -> Motion:
    """POV kinematics given the (possibly infinite) brake-onset time."""
    b = float(p.b)
    s0, v, a = lane_coordinate(inst.x_pov), float(inst.v_pov), float(beh.a_pov)
    segs: list = []
    if a < 0.0:
        t_self_stop = v / -a
        if t_self_stop <= t_brake:
            # comes to rest on its own; the later brake command is a no-op
            segs.append((0.0, s0, v, a))
            segs.append((t_self_stop, s0 + v * v / (2.0 * -a), 0.0, 0.0))
            return Motion(segs)
    if math.isinf(t_brake):
        if v == 0.0 and a <= 0.0:
            return Motion([(0.0, s0, 0.0, 0.0)])
        return Motion([(0.0, s0, v, a)])
    segs.append((0.0, s0, v, a))
    s_br = _seg_pos(0.0, s0, v, a, t_brake)
    v_br = max(0.0, v + a * t_brake)
    segs += _braking_tail(t_brake, s_br, v_br, b)
    return Motion(segs)


def _occupancy(m: Motion, lo: float, hi: float) -> tuple:
    """Closed time interval during which the motion is inside [lo, hi]."""
    t_in = m.time_to_reach(lo)
    if t_in is None:
        return (None, None)
    t_out = m.time_to_reach(hi)
    return (t_in, t_out if t_out is not None else math.inf)


def analyze_instance(inst: Instance, beh: Behavior,
                     p: IntersectionParams) -> SimOutcome:
    """Exact outcome of one simulation from closed-form event times."""
    lo_sv, hi_sv = float(p.cz_sv[0]), float(p.cz_sv[1])
    lo_pov, hi_pov = float(p.cz_pov[0]), float(p.cz_pov[1])
    sv = sv_motion(inst, p)
    sv_in, sv_out = _occupancy(sv, lo_sv, hi_sv)
    t_brake = math.inf if sv_in is None else sv_in + float(p.rho)
    pov = pov_motion(inst, beh, p, t_brake)
    pov_in, pov_out = _occupancy(pov, lo_pov, hi_pov)
    if sv_in is None or pov_in is None:
        return SimOutcome(False, sv_window=(sv_in, sv_out),
                          pov_window=(pov_in, pov_out))
    t_c = max(sv_in, pov_in)
    if t_c <= min(sv_out, pov_out):
        return SimOutcome(True, t_collision=t_c, sv_window=(sv_in, sv_out),
                          pov_window=(pov_in, pov_out))
    return SimOutcome(False, sv_window=(sv_in, sv_out),
                      pov_window=(pov_in, pov_out))


# ---------------------------------------------------------------------------
# Step-by-step engine
# ---------------------------------------------------------------------------


def _advance(s: float, v: float, a: float, h: float) -> tuple:
    """Exact constant-acceleration step with the speed clamped at zero."""
    if a < 0.0 and v + a * h < 0.0:
        tau = v / -a
        return s + v * tau + 0.5 * a * tau * tau, 0.0
    return s + v * h + 0.5 * a * h * h, v + a * h


def _bisect_crossing(pos, t_lo: float, t_hi: float, target: float,
                     tol: float) -> float:
    """Time at which the nondecreasing pos(t) first reaches target."""
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if pos(mid) >= target:
            t_hi = mid
        else:
            t_lo = mid
    return t_hi


def simulate(inst: Instance, beh: Behavior, p: IntersectionParams,
             cfg: SimCfg | None = None, keep_trace: bool = False) -> SimOutcome:
    """Fixed-step simulation of one instance under one behavior.

    Every CZ-boundary crossing is refined by bisection to ``cfg.event_tol``,
    and the POV brake onset is scheduled at the bisected SV entry time plus
    exactly ρ.  The run terminates once both vehicles are past their CZ or
    permanently stopped; ``horizon_exceeded`` flags the (unexpected) case
    where that never happens within ``cfg.horizon``.
    """
    cfg = cfg or SimCfg()
    beh.validate(p)
    rho, b = float(p.rho), float(p.b)
    lo_sv, hi_sv = float(p.cz_sv[0]), float(p.cz_sv[1])
    lo_pov, hi_pov = float(p.cz_pov[0]), float(p.cz_pov[1])

    t = 0.0
    s_sv, v_sv = lane_coordinate(inst.x_sv), float(inst.v_sv)
    s_pov, v_pov = lane_coordinate(inst.x_pov), float(inst.v_pov)
    t_brake = math.inf
    sv_in = sv_out = pov_in = pov_out = None
    trace: list = [(t, s_sv, v_sv, s_pov, v_pov)] if keep_trace else []

    def sv_accel(now: float, speed: float) -> float:
        return 0.0 if now < rho else (-b if speed > 0.0 else 0.0)

    def pov_accel(now: float, speed: float) -> float:
        a = float(beh.a_pov) if now < t_brake else -b
        return 0.0 if speed <= 0.0 and a < 0.0 else a

    horizon_exceeded = False
    while True:
        done_sv = s_sv > hi_sv or (v_sv == 0.0 and t >= rho)
        done_pov = s_pov > hi_pov or (
            v_pov == 0.0 and (float(beh.a_pov) <= 0.0 or t >= t_brake)
        )
        if done_sv and done_pov:
            break
        if t >= cfg.horizon:
            horizon_exceeded = True
            break
        # split the step at the known switch instants
        h = cfg.dt
        for boundary in (rho, t_brake):
            if t < boundary < t + h:
                h = boundary - t
        prev = (t, s_sv, v_sv, s_pov, v_pov)
        a_sv, a_pov = sv_accel(t, v_sv), pov_accel(t, v_pov)
        s_sv, v_sv = _advance(s_sv, v_sv, a_sv, h)
        s_pov, v_pov = _advance(s_pov, v_pov, a_pov, h)
        t += h

        def pos_sv(when: float) -> float:
            return _advance(prev[1], prev[2], a_sv, when - prev[0])[0]

        def pos_pov(when: float) -> float:
            return _advance(prev[3], prev[4], a_pov, when - prev[0])[0]

        if sv_in is None and s_sv >= lo_sv:
            sv_in = _bisect_crossing(pos_sv, prev[0], t, lo_sv, cfg.event_tol)
            t_brake = sv_in + rho
        if sv_in is not None and sv_out is None and s_sv >= hi_sv:
            sv_out = _bisect_crossing(pos_sv, prev[0], t, hi_sv, cfg.event_tol)
        if pov_in is None and s_pov >= lo_pov:
            pov_in = _bisect_crossing(pos_pov, prev[0], t, lo_pov, cfg.event_tol)
        if pov_in is not None and pov_out is None and s_pov >= hi_pov:
            pov_out = _bisect_crossing(pos_pov, prev[0], t, hi_pov, cfg.event_tol)
        if keep_trace:
            trace.append((t, s_sv, v_sv, s_pov, v_pov))

    sv_window = (sv_in, sv_out if sv_out is not None else
                 (math.inf if sv_in is not None else None))
    pov_window = (pov_in, pov_out if pov_out is not None else
                  (math.inf if pov_in is not None else None))
    collision = False
    t_collision = None
    if sv_in is not None and pov_in is not None:
        t_c = max(sv_in, pov_in)
        if t_c <= min(sv_window[1], pov_window[1]):
            collision, t_collision = True, t_c
    return SimOutcome(collision, t_collision, horizon_exceeded,
                      sv_window, pov_window, tuple(trace))


# ---------------------------------------------------------------------------
# Condition evaluation
# ---------------------------------------------------------------------------


class IndeterminateCondition(Exception):
    """The solver could not decide the condition on a concrete instance."""


def _exact(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


def instance_store(inst: Instance) -> dict:
    """Concrete rational values of the condition variables for an instance."""
    return {
        "x_SV": _exact(lane_coordinate(inst.x_sv)),
        "v_SV": _exact(inst.v_sv),
        "x_POV": _exact(lane_coordinate(inst.x_pov)),
        "v_POV": _exact(inst.v_pov),
    }


def evaluate_condition(inst: Instance, a: Assertion, solver=None,
                       timeout: float = 60.0) -> bool:
    """Whether the instance satisfies (complies with) the RSS condition."""
    store = instance_store(inst)
    try:
        return satisfies(store, a)
    except QuantifiedEvaluationError:
        closed = substitute(a, [(k, Term.const(v)) for k, v in store.items()])
        verdict = smt.check_validity(closed, timeout=timeout, solver=solver)
        if verdict.kind == smt.VALID:
            return True
        if verdict.kind == smt.INVALID:
            return False
        raise IndeterminateCondition(verdict.reason or verdict.kind)


# ---------------------------------------------------------------------------
# The experiment grid
# ---------------------------------------------------------------------------


def default_grid() -> list:
    """The evaluation grid: x ∈ {5,…,45} m, v ∈ {3,…,18} m/s, both vehicles."""
    xs = range(5, 50, 5)
    vs = range(3, 21, 3)
    return [
        Instance(float(xs_), float(vs_), float(xp), float(vp))
        for xs_ in xs for vs_ in vs for xp in xs for vp in vs
    ]


def default_behaviors() -> list:
    return [Behavior(float(a)) for a in range(-5, 3)]


@dataclass(frozen=True)
class SimRecord:
    instance: Instance
    behavior: Behavior
    collision: bool
    t_collision: float | None


@dataclass
class InstanceRecord:
    instance: Instance
    complying: bool | None  # None = solver-indeterminate
    unsafe_count: int
    sims: tuple


@dataclass
class ConfusionMatrix:
    """Counts of {complying, non-complying} × {experimentally safe, unsafe}.

    Positives are the *non-complying* flags, so precision is the fraction of
    flagged instances that are experimentally unsafe and recall the fraction
    of unsafe instances that were flagged.  Indeterminate instances (solver
    could not decide the condition) are counted separately and never as
    complying.
    """

    complying_safe: int = 0
    complying_unsafe: int = 0
    noncomplying_safe: int = 0
    noncomplying_unsafe: int = 0
    indeterminate: int = 0

    @property
    def total(self) -> int:
        return (self.complying_safe + self.complying_unsafe
                + self.noncomplying_safe + self.noncomplying_unsafe
                + self.indeterminate)

    @property
    def precision(self) -> float | None:
        flagged = self.noncomplying_safe + self.noncomplying_unsafe
        return self.noncomplying_unsafe / flagged if flagged else None

    @property
    def recall(self) -> float | None:
        unsafe = self.complying_unsafe + self.noncomplying_unsafe
        return self.noncomplying_unsafe / unsafe if unsafe else None

    def as_dict(self) -> dict:
        return {
            "complying_safe": self.complying_safe,
            "complying_unsafe": self.complying_unsafe,
            "noncomplying_safe": self.noncomplying_safe,
            "noncomplying_unsafe": self.noncomplying_unsafe,
            "indeterminate": self.indeterminate,
            "total": self.total,
            "precision": self.precision,
            "recall": self.recall,
        }


@dataclass
class GridResult:
    matrix: ConfusionMatrix
    records: list
    histogram: dict = field(default_factory=dict)  # unsafe_count -> instances

    @property
    def simulations(self) -> int:
        return sum(len(r.sims) for r in self.records)


def _label_instance(inst: Instance, behaviors: Sequence[Behavior],
                    p: IntersectionParams) -> tuple:
    sims = []
    unsafe = 0
    for beh in behaviors:
        out = analyze_instance(inst, beh, p)
        sims.append(SimRecord(inst, beh, out.collision, out.t_collision))
        unsafe += out.collision
    return unsafe, tuple(sims)


def _grid_chunk(args) -> list:
    instances, behaviors, p = args
    return [_label_instance(inst, behaviors, p) for inst in instances]


def run_grid(a: Assertion, instances: Sequence[Instance] | None = None,
             behaviors: Sequence[Behavior] | None = None,
             p: IntersectionParams | None = None, cfg: SimCfg | None = None,
             jobs: int = 1, solver=None) -> GridResult:
    """Label every instance by the condition and by exhaustive simulation.

    The simulation labels come from the closed-form engine, so they do not
    depend on ``cfg.dt``, on ``jobs``, or on scheduling; ``cfg`` is accepted
    for interface symmetry with :func:`simulate`.
    """
    instances = list(instances) if instances is not None else default_grid()
    behaviors = list(behaviors) if behaviors is not None else default_behaviors()
    p = p or IntersectionParams()
    for beh in behaviors:
        beh.validate(p)

    if jobs > 1 and len(instances) > 1:
        chunk = max(1, (len(instances) + jobs - 1) // jobs)
        parts = [instances[i:i + chunk] for i in range(0, len(instances), chunk)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            labeled_chunks = list(pool.map(
                _grid_chunk, [(part, behaviors, p) for part in parts]
            ))
        labeled = [item for chunk_out in labeled_chunks for item in chunk_out]
    else:
        labeled = _grid_chunk((instances, behaviors, p))

    matrix = ConfusionMatrix()
    records = []
    histogram: dict = {}
    for inst, (unsafe_count, sims) in zip(instances, labeled):
        try:
            complying = evaluate_condition(inst, a, solver=solver)
        except IndeterminateCondition:
            complying = None
        unsafe = unsafe_count > 0
        if complying is None:
            matrix.indeterminate += 1
        elif complying and unsafe:
            matrix.complying_unsafe += 1
        elif complying:
            matrix.complying_safe += 1
        elif unsafe:
            matrix.noncomplying_unsafe += 1
        else:
            matrix.noncomplying_safe += 1
        if complying is False and unsafe:
            histogram[unsafe_count] = histogram.get(unsafe_count, 0) + 1
        records.append(InstanceRecord(inst, complying, unsafe_count, sims))
    return GridResult(matrix, records, histogram)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("x_sv", "v_sv", "x_pov", "v_pov", "a_pov",
               "collision", "t_collision")


def export_results(result: GridResult, csv_path, json_path=None) -> None:
    """One CSV row per simulation plus a JSON summary of the matrix."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in result.records:
            for sim in rec.sims:
                inst = sim.instance
                writer.writerow([
                    repr(inst.x_sv), repr(inst.v_sv),
                    repr(inst.x_pov), repr(inst.v_pov),
                    repr(sim.behavior.a_pov),
                    int(sim.collision),
                    "" if sim.t_collision is None else repr(sim.t_collision),
                ])
    if json_path is not None:
        summary = {
            "matrix": result.matrix.as_dict(),
            "simulations": result.simulations,
            "instances": len(result.records),
            "unsafe_histogram": {
                str(k): v for k, v in sorted(result.histogram.items())
            },
        }
        with open(json_path, "w") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")


def load_results_csv(csv_path) -> list:
    """Round-trip reader for :func:`export_results` CSV files."""
    out = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(SimRecord(
                Instance(float(row["x_sv"]), float(row["v_sv"]),
                         float(row["x_pov"]), float(row["v_pov"])),
                Behavior(float(row["a_pov"])),
                bool(int(row["collision"])),
                float(row["t_collision"]) if row["t_collision"] else None,
            ))
    return out
