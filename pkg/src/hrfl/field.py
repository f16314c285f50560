"""The multitime walk field, its deterministic limit, and fluctuation fields.

Each sampled line steps the surface by +r or -r across itself; the height of
the half-plane containing the origin is zero.  Summing over a configuration,

    H(b) = epsilon * sum_i r_i * (1{b right of line i} - 1{o right of line i}),

which makes surface differences telescope: H(b) - H(a) depends only on the
lines separating a from b.  The deterministic limit replaces the empirical
sums by crossing moments of the intensity.

Two evaluation paths are provided: a naive per-point scan and a pre-sorted
pivot index for batches along constant-time slices.  Both gather the same
crossing subsets and sum them in ascending storage order, so they agree
bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import ORIGIN, Segment, SpaceTimePoint
from .sampler import SampledConfiguration


def _signed_subset_sum(r: np.ndarray, plus_idx: np.ndarray, minus_idx: np.ndarray,
                       compensated: bool) -> float:
    if compensated:
        return math.fsum(r[plus_idx]) - math.fsum(r[minus_idx])
    return float(np.sum(r[plus_idx]) - np.sum(r[minus_idx]))


def surface_sum(x: np.ndarray, v: np.ndarray, r: np.ndarray, b: SpaceTimePoint,
                compensated: bool = False) -> float:
    """Unweighted surface sum_i r_i (1{b right of i} - 1{o right of i})."""
    ub = x + b.t * v <= b.x
    uo = x <= 0.0
    plus = np.nonzero(ub & ~uo)[0]
    minus = np.nonzero(uo & ~ub)[0]
    return _signed_subset_sum(r, plus, minus, compensated)


def walk_field(config: SampledConfiguration, b: SpaceTimePoint,
               compensated: bool = False) -> float:
    """H(b) for a sampled configuration, including the epsilon weight.

    b must lie in the observation region: outside it the sampling window
    does not guarantee every crossing line was drawn.
    """
    if not config.region.contains(b.x, b.t):
        raise ValueError(f"evaluation point ({b.x}, {b.t}) outside observation region")
    return config.epsilon * surface_sum(config.x, config.v, config.r, b, compensated)


def walk_field_difference(config: SampledConfiguration, a: SpaceTimePoint,
                          b: SpaceTimePoint, compensated: bool = False) -> float:
    """H(b) - H(a) evaluated directly from the crossings of segment ab."""
    for p in (a, b):
        if not config.region.contains(p.x, p.t):
            raise ValueError(f"evaluation point ({p.x}, {p.t}) outside observation region")
    ua = config.x + a.t * config.v <= a.x
    ub = config.x + b.t * config.v <= b.x
    plus = np.nonzero(ub & ~ua)[0]
    minus = np.nonzero(ua & ~ub)[0]
    return config.epsilon * _signed_subset_sum(config.r, plus, minus, compensated)


class SliceEvaluator:
    """Pre-sorted pivot index for batched evaluations along a constant-t slice.

    Lines are split by the side of the origin and sorted by their position
    at the slice time; each evaluation gathers the crossing subset by binary
    search and sums it in storage order, matching walk_field bit for bit.
    """

    def __init__(self, config: SampledConfiguration, t: float):
        self.config = config
        self.t = float(t)
        pos = config.x + self.t * config.v
        uo = config.x <= 0.0
        self._idx_right = np.nonzero(uo)[0]
        self._idx_left = np.nonzero(~uo)[0]
        ord_r = np.argsort(pos[self._idx_right], kind="stable")
        ord_l = np.argsort(pos[self._idx_left], kind="stable")
        self._idx_right = self._idx_right[ord_r]
        self._idx_left = self._idx_left[ord_l]
        self._pos_right = pos[self._idx_right]
        self._pos_left = pos[self._idx_left]

    def value(self, bx: float, compensated: bool = False) -> float:
        if not self.config.region.contains(bx, self.t):
            raise ValueError(f"evaluation point ({bx}, {self.t}) outside observation region")
        # plus: origin-left lines now at position <= bx; minus: origin-right lines beyond bx
        np_ = np.searchsorted(self._pos_left, bx, side="right")
        nm = np.searchsorted(self._pos_right, bx, side="right")
        plus = np.sort(self._idx_left[:np_])
        minus = np.sort(self._idx_right[nm:])
        return self.config.epsilon * _signed_subset_sum(self.config.r, plus, minus, compensated)


def walk_field_grid(config: SampledConfiguration, xs, ts) -> np.ndarray:
    """H on the grid xs x ts via per-slice sorted evaluation; shape (len(ts), len(xs))."""
    out = np.empty((len(ts), len(xs)))
    for i, t in enumerate(ts):
        ev = SliceEvaluator(config, t)
        for j, x in enumerate(xs):
            out[i, j] = ev.value(float(x))
    return out


def limit_field(model, b: SpaceTimePoint) -> float:
    """Deterministic limit surface: mu_1(ob+) - mu_1(ob-)."""
    seg = Segment(ORIGIN, b)
    if seg.is_degenerate:
        return 0.0
    return (model.moment_on_crossing(1, seg, "plus")
            - model.moment_on_crossing(1, seg, "minus"))


def limit_field_difference(model, a: SpaceTimePoint, b: SpaceTimePoint) -> float:
    seg = Segment(a, b)
    if seg.is_degenerate:
        return 0.0
    return (model.moment_on_crossing(1, seg, "plus")
            - model.moment_on_crossing(1, seg, "minus"))


def euler_fluctuation(config: SampledConfiguration, model, b: SpaceTimePoint) -> float:
    """(H_sample(b) - H_limit(b)) / sqrt(epsilon)."""
    return (walk_field(config, b) - limit_field(model, b)) / math.sqrt(config.epsilon)


def frame_surface(config: SampledConfiguration, frame: SpaceTimePoint,
                  offset: SpaceTimePoint) -> float:
    """Empirical surface seen from the frame point: H(frame+offset) - H(frame)."""
    return walk_field_difference(config, frame, frame.translated(offset.x, offset.t))


def limit_frame_surface(model, frame: SpaceTimePoint, offset: SpaceTimePoint) -> float:
    return limit_field_difference(model, frame, frame.translated(offset.x, offset.t))


def diffusive_fluctuations(config: SampledConfiguration, model,
                           frame: SpaceTimePoint,
                           offset: SpaceTimePoint) -> tuple[float, float]:
    """The pair (eta_hat, eta_tilde) at one offset from the frame point.

    The configuration must be sampled at scale epsilon^2; with
    epsilon = sqrt(config.epsilon),

        eta_hat   = eps^(-3/2) * (frame surface at eps-scaled offset, centered)
        eta_tilde = eps^(-1)   * (frame surface at the offset itself, centered)

    Both are functions of the same sample; their limits are independent
    Gaussian fields.
    """
    eps = math.sqrt(config.epsilon)
    small = SpaceTimePoint(eps * offset.x, eps * offset.t)
    eta_hat = (frame_surface(config, frame, small)
               - limit_frame_surface(model, frame, small)) / eps ** 1.5
    eta_tilde = (frame_surface(config, frame, offset)
                 - limit_frame_surface(model, frame, offset)) / eps
    return eta_hat, eta_tilde
