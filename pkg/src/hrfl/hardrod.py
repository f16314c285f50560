"""Hard-rod dynamics: dilation geometry, surface evolution and an event oracle.

An ideal-gas configuration is a finite set of massless particles (x, v, r)
moving ballistically.  The dilation with respect to a reference point z
inserts each particle's mark as a rod length, mapping gas to a hard-rod
configuration with no rod covering z; the contraction removes the lengths
again.  The two evolution routes implemented here are

* the surface representation: the rod born from particle (x, v, r) sits at
  ``x + v t + m + j`` where m is the signed rod length between 0 and x and
  j is the signed length flux across the particle's moving line, and

* an event-driven simulation: rods travel ballistically and swap positions
  at contact (the left extreme of the updated slow rod goes to the left
  extreme of the fast rod, the right extreme of the updated fast rod to the
  right extreme of the slow rod).

The mass formula is half-open, counting marks with ``z <= x < x_query``;
points exactly at a boundary follow the formula literally.  Both routes
keep per-rod identity, so they can be compared rod by rod.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

TIME_TOL = 1e-12
GAP_TOL = 1e-9


class RodOverlapError(ValueError):
    """A configuration violates the disjoint-rod invariant."""


class SimultaneousCollisionError(RuntimeError):
    """Two collisions closer than the time tolerance; regenerate the sample."""


def _as_array(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=float))


@dataclass
class GasConfiguration:
    """Ideal-gas particles: positions, velocities, marks (future rod lengths)."""

    x: np.ndarray
    v: np.ndarray
    r: np.ndarray

    def __init__(self, x, v, r):
        self.x, self.v, self.r = _as_array(x), _as_array(v), _as_array(r)
        if not (len(self.x) == len(self.v) == len(self.r)):
            raise ValueError("x, v, r must have equal length")

    @property
    def n(self) -> int:
        return len(self.x)

    def require_nonnegative_marks(self) -> None:
        if self.n and self.r.min() < 0.0:
            raise ValueError("hard-rod operations require marks r >= 0")


@dataclass
class RodConfiguration:
    """Hard rods (y, v, r): left endpoint, velocity, length >= 0.

    The open intervals (y, y + r) must be pairwise disjoint; rods may touch.
    Zero-length rods (tracers) are admitted everywhere.
    """

    y: np.ndarray
    v: np.ndarray
    r: np.ndarray

    def __init__(self, y, v, r, validate: bool = True):
        self.y, self.v, self.r = _as_array(y), _as_array(v), _as_array(r)
        if not (len(self.y) == len(self.v) == len(self.r)):
            raise ValueError("y, v, r must have equal length")
        self.collisions: int | None = None  # filled by the event oracle
        if validate:
            self.validate()

    @property
    def n(self) -> int:
        return len(self.y)

    def validate(self) -> None:
        if self.n and self.r.min() < 0.0:
            raise RodOverlapError("rod lengths must be >= 0")
        if self.n < 2:
            return
        order = np.argsort(self.y, kind="stable")
        y, r = self.y[order], self.r[order]
        gaps = y[1:] - (y[:-1] + r[:-1])
        scale = max(1.0, float(np.abs(y).max()))
        if gaps.min() < -GAP_TOL * scale:
            raise RodOverlapError(
                f"overlapping rods: worst gap {gaps.min():.3e}")

    def shifted(self, c: float) -> "RodConfiguration":
        return RodConfiguration(self.y + c, self.v, self.r, validate=False)

    def covering_rod(self, z: float = 0.0) -> int | None:
        """Index of the rod whose open interval contains z, if any."""
        hit = np.nonzero((self.y < z) & (z < self.y + self.r))[0]
        return int(hit[0]) if len(hit) else None


# ---------------------------------------------------------------------------
# gas-side primitives
# ---------------------------------------------------------------------------

def ideal_gas_evolve(gas: GasConfiguration, t: float) -> GasConfiguration:
    """Free flow: (x, v, r) -> (x + v t, v, r)."""
    return GasConfiguration(gas.x + gas.v * t, gas.v, gas.r)


def _strict_below_mass(positions: np.ndarray, marks: np.ndarray):
    """Returns S with S(q) = sum of marks at positions strictly below q."""
    order = np.argsort(positions, kind="stable")
    sorted_pos = positions[order]
    cum = np.concatenate([[0.0], np.cumsum(marks[order])])

    def S(q):
        return cum[np.searchsorted(sorted_pos, q, side="left")]

    return S


def mass_between(positions, marks, z: float, x) -> float | np.ndarray:
    """Signed added mark between z and x: half-open count over [z, x).

    Equals S(x) - S(z) for the strictly-below cumulative S, which makes the
    antisymmetry m_z^x = -m_x^z automatic.
    """
    S = _strict_below_mass(_as_array(positions), _as_array(marks))
    out = S(x) - S(z)
    return float(out) if np.ndim(x) == 0 else out


def mass(gas: GasConfiguration, z: float, x: float) -> float:
    return mass_between(gas.x, gas.r, z, x)


def dilate(gas: GasConfiguration, z: float = 0.0) -> RodConfiguration:
    """Insert rod lengths: (x, v, r) -> (x + m_z^x, v, r); image avoids z."""
    gas.require_nonnegative_marks()
    S = _strict_below_mass(gas.x, gas.r)
    y = gas.x + (S(gas.x) - S(z))
    return RodConfiguration(y, gas.v, gas.r)


def contract(rods: RodConfiguration, z: float = 0.0) -> GasConfiguration:
    """Remove rod lengths: (y, v, r) -> (y - m_z^y, v, r); inverse of dilate."""
    if rods.covering_rod(z) is not None:
        raise ValueError(f"contraction reference {z} is covered by a rod")
    S = _strict_below_mass(rods.y, rods.r)
    x = rods.y - (S(rods.y) - S(z))
    return GasConfiguration(x, rods.v, rods.r)


def flux(gas: GasConfiguration, x: float, v: float, t: float) -> float:
    """Signed mark length crossing the moving line through (x, 0) with slope v.

    Counts particles strictly overtaken by the line (+) and strictly
    overtaking it (-) during [0, t]; the line's own phase point, if present,
    never crosses itself.
    """
    s0 = x + v * t
    pos_t = gas.x + gas.v * t
    forward = (gas.x > x) & (pos_t < s0)
    backward = (gas.x < x) & (pos_t > s0)
    return float(np.sum(gas.r[forward]) - np.sum(gas.r[backward]))


def quasiparticle_positions(gas: GasConfiguration, t: float) -> np.ndarray:
    """Positions x + v t + m + j of every tagged rod at time t.

    Combining the mass and flux sums telescopes to
    ``x + v t + S_t(x + v t) - S_0(0)`` with S_t the strictly-below mark
    cumulative of the time-t positions, so the whole batch costs one sort.
    """
    pos_t = gas.x + gas.v * t
    S_t = _strict_below_mass(pos_t, gas.r)
    S_0 = _strict_below_mass(gas.x, gas.r)
    return pos_t + (S_t(pos_t) - S_0(0.0))


def evolve_surface(gas: GasConfiguration, t: float) -> RodConfiguration:
    """Hard-rod state at time t of the dilated gas, via the surface route.

    At t = 0 this is dilate(gas, 0).  Per-rod identity follows the gas
    particle order.
    """
    gas.require_nonnegative_marks()
    return RodConfiguration(quasiparticle_positions(gas, t), gas.v, gas.r)


# ---------------------------------------------------------------------------
# event-driven oracle
# ---------------------------------------------------------------------------

def evolve_events(rods: RodConfiguration, t: float,
                  time_tol: float = TIME_TOL) -> RodConfiguration:
    """Event-driven hard-rod evolution to time t (independent oracle).

    Rods advance ballistically between adjacent-pair contacts; at contact
    the pair swaps positions.  Events are kept in a heap and invalidated
    lazily via per-rod version counters; positions are advanced globally at
    each event.  Two valid collisions closer than time_tol raise
    SimultaneousCollisionError.  Negative times run the reversed dynamics
    with flipped velocities.  The returned configuration carries the number
    of processed events in its ``collisions`` attribute.
    """
    if t == 0.0:
        out = RodConfiguration(rods.y.copy(), rods.v.copy(), rods.r.copy(),
                               validate=False)
        out.collisions = 0
        return out
    if t < 0.0:
        back = evolve_events(RodConfiguration(rods.y, -rods.v, rods.r,
                                              validate=False), -t, time_tol)
        out = RodConfiguration(back.y, rods.v.copy(), rods.r.copy(),
                               validate=False)
        out.collisions = back.collisions
        return out
    rods.validate()
    n = rods.n
    pos = rods.y.astype(float).copy()
    vel, length = rods.v, rods.r
    if n < 2:
        out = RodConfiguration(pos + vel * t, vel.copy(), length.copy(),
                               validate=False)
        out.collisions = 0
        return out

    order = list(np.argsort(pos, kind="stable"))
    rank = {rod: k for k, rod in enumerate(order)}
    version = [0] * n
    now = 0.0
    events = 0
    heap: list[tuple[float, int, int, int, int]] = []

    def contact_time(left: int, right: int) -> float | None:
        dv = vel[left] - vel[right]
        if dv <= 0.0:
            return None
        gap = pos[right] - (pos[left] + length[left])
        return now + max(gap, 0.0) / dv

    def push_pair(k: int) -> None:
        if 0 <= k < n - 1:
            left, right = order[k], order[k + 1]
            tau = contact_time(left, right)
            if tau is not None and tau <= t:
                heapq.heappush(heap, (tau, left, right, version[left], version[right]))

    for k in range(n - 1):
        push_pair(k)

    def valid(entry) -> bool:
        tau, left, right, vl, vr = entry
        return (version[left] == vl and version[right] == vr
                and rank[left] + 1 == rank[right])

    while heap:
        entry = heapq.heappop(heap)
        if not valid(entry):
            continue
        tau, left, right, _, _ = entry
        if tau > t:
            break
        # spec'd guard: ambiguous simultaneous events force a resample
        while heap and heap[0][0] <= tau + time_tol:
            nxt = heapq.heappop(heap)
            if valid(nxt) and not (nxt[1] == left and nxt[2] == right):
                raise SimultaneousCollisionError(
                    f"collisions at {tau} and {nxt[0]} within {time_tol}")
        pos += vel * (tau - now)
        now = tau
        yf = pos[left]
        pos[right] = yf                      # slow rod takes the fast rod's left extreme
        pos[left] = yf + length[right]       # fast rod lands past the slow rod
        k = rank[left]
        order[k], order[k + 1] = right, left
        rank[left], rank[right] = k + 1, k
        version[left] += 1
        version[right] += 1
        events += 1
        push_pair(k - 1)
        push_pair(k + 1)

    pos += vel * (t - now)
    out = RodConfiguration(pos, vel.copy(), length.copy())
    out.collisions = events
    return out


# ---------------------------------------------------------------------------
# tagged-frame dynamics and the empty-space shift
# ---------------------------------------------------------------------------

def origin_tracer_displacement(gas: GasConfiguration, t: float) -> float:
    """Position at time t of a zero-length zero-velocity tracer started at 0."""
    return flux(gas, 0.0, 0.0, t)


def _tracer_flux_halfopen(gas: GasConfiguration, t: float) -> float:
    """Tracer displacement counting an at-zero particle as right-side.

    Matches the half-open mass convention, under which a particle exactly at
    the tracer belongs to the right; needed so the covering-rod transport
    (which parks a gas particle exactly at 0) stays consistent.  Away from
    ties this equals origin_tracer_displacement.
    """
    pos_t = gas.x + gas.v * t
    right_0 = gas.x >= 0.0
    right_t = pos_t >= 0.0
    return float(np.sum(gas.r[right_0 & ~right_t])
                 - np.sum(gas.r[~right_0 & right_t]))


def tagged_frame_evolve(rods: RodConfiguration, t: float) -> RodConfiguration:
    """Evolution seen from the origin tracer: dilate(T_t(contract(Y))).

    Requires a configuration with no rod covering the origin.
    """
    return dilate(ideal_gas_evolve(contract(rods, 0.0), t), 0.0)


def full_evolve(rods: RodConfiguration, t: float) -> RodConfiguration:
    """Hard-rod evolution through the tagged-frame route, for any input.

    On configurations avoiding the origin this is the tagged-frame motion
    shifted by the tracer displacement; a configuration whose rod covers the
    origin is transported to one that avoids it and back.
    """
    cover = rods.covering_rod(0.0)
    if cover is not None:
        q = float(rods.y[cover])
        return full_evolve(rods.shifted(-q), t).shifted(q)
    gas = contract(rods, 0.0)
    return tagged_frame_evolve(rods, t).shifted(_tracer_flux_halfopen(gas, t))


def empty_space_position(rods: RodConfiguration, z: float) -> float:
    """The point b with exactly |z| empty space between 0 and b (signed).

    Requires no rod covering 0.  Walks gap by gap in the direction of z;
    beyond the last rod all space is empty, so a solution always exists for
    finite configurations.  When z lands exactly at a rod edge the smallest
    solution is returned.
    """
    if rods.covering_rod(0.0) is not None:
        raise ValueError("empty-space walk needs 0 in empty space")
    if z == 0.0:
        return 0.0
    order = np.argsort(rods.y, kind="stable")
    y, r = rods.y[order], rods.r[order]
    remaining = abs(z)
    cur = 0.0
    if z > 0.0:
        for yi, ri in zip(y[y + r > 0], r[y + r > 0]):
            gap = max(yi - cur, 0.0)
            if remaining <= gap:
                return cur + remaining
            remaining -= gap
            cur = yi + ri
        return cur + remaining
    rights = (y + r)[::-1]
    lefts = y[::-1]
    sel = rights <= 0
    for yi, ei in zip(lefts[sel], rights[sel]):
        gap = max(cur - ei, 0.0)
        if remaining <= gap:
            return cur - remaining
        remaining -= gap
        cur = yi
    return cur - remaining


def empty_space_shift(rods: RodConfiguration, z: float,
                      via: str = "gaps") -> RodConfiguration:
    """Recenter the configuration at the point |z| of empty space away.

    Positive z walks right: the configuration shifts left by the walked
    distance b(z).  The "gaps" route shifts by -b(z) directly; the
    "contraction" route computes dilate(shift(contract(Y), -z)); the two
    agree except at measure-zero edge ties.
    """
    if via == "gaps":
        return rods.shifted(-empty_space_position(rods, z))
    if via == "contraction":
        gas = contract(rods, 0.0)
        return dilate(GasConfiguration(gas.x - z, gas.v, gas.r), 0.0)
    raise ValueError("via must be 'gaps' or 'contraction'")


# ---------------------------------------------------------------------------
# windowed comparisons
# ---------------------------------------------------------------------------

def safe_core_mask(gas: GasConfiguration, t: float,
                   window_x: tuple[float, float], max_speed: float) -> np.ndarray:
    """Particles whose evolution to time t is unaffected by the window edges.

    The mass term needs every line between 0 and x; the flux term needs
    every line able to cross the particle's moving segment, whose intercepts
    stay within (|v| + V)|t| of x.
    """
    lo, hi = window_x
    reach = (np.abs(gas.v) + max_speed) * abs(t)
    return ((np.minimum(gas.x, 0.0) >= lo) & (np.maximum(gas.x, 0.0) <= hi)
            & (gas.x - reach >= lo) & (gas.x + reach <= hi))


def compare_evolutions(gas: GasConfiguration, t: float,
                       window_x: tuple[float, float] | None = None,
                       max_speed: float | None = None) -> float:
    """Max per-rod distance between the surface route and the event oracle.

    With a window, the comparison restricts automatically to the safe core;
    for a self-contained finite configuration pass window_x=None to compare
    every rod.
    """
    surf = evolve_surface(gas, t)
    ev = evolve_events(dilate(gas, 0.0), t)
    if window_x is None:
        mask = np.ones(gas.n, dtype=bool)
    else:
        if max_speed is None:
            max_speed = float(np.abs(gas.v).max(initial=0.0))
        mask = safe_core_mask(gas, t, window_x, max_speed)
    if not mask.any():
        return 0.0
    return float(np.abs(surf.y[mask] - ev.y[mask]).max())


