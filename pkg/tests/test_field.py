import math

import numpy as np
import pytest

from hrfl.field import (
    SliceEvaluator,
    euler_fluctuation,
    diffusive_fluctuations,
    limit_field,
    walk_field,
    walk_field_difference,
    walk_field_grid,
)
from hrfl.gaussian import distance
from hrfl.geometry import ORIGIN, Segment, SpaceTimePoint
from hrfl.intensity import (
    ConstantDensity,
    ConstantMark,
    IntensityModel,
    ProductKernel,
    UniformVelocity,
)
from hrfl.sampler import ObservationRegion, SampledConfiguration, sample, stream


def make_config(x, v, r, epsilon=1.0, halfwidth=20.0):
    x = np.asarray(x, dtype=float)
    region = ObservationRegion((-halfwidth, halfwidth), (-halfwidth, halfwidth))
    window = (-3 * halfwidth, 3 * halfwidth)
    return SampledConfiguration(x, np.asarray(v, dtype=float),
                                np.asarray(r, dtype=float), epsilon, window,
                                region, 0)


def random_config(rng, n=60, halfwidth=20.0, signed_marks=False):
    lo = -0.5 if signed_marks else 0.05
    return make_config(rng.uniform(-halfwidth, halfwidth, n),
                       rng.uniform(-1, 1, n),
                       rng.uniform(lo, 0.5, n), halfwidth=halfwidth)


def mandelbrot_field(config, b):
    """Crossing-count variant: steps +r across every line of the segment ob.

    Test-only helper; unlike the walk field its differences are not
    translation covariant.
    """
    sa = config.x <= 0.0
    sb = config.x + b.t * config.v <= b.x
    return config.epsilon * float(np.sum(config.r[sa != sb]))


def test_field_zero_at_origin(rng):
    cfg = random_config(rng)
    assert walk_field(cfg, ORIGIN) == 0.0


def test_single_point_examples():
    cfg = make_config([0.5], [0.0], [1.0])
    b = SpaceTimePoint(1.0, 0.0)
    assert walk_field(cfg, b) == 1.0
    a = SpaceTimePoint(0.7, 0.0)
    # both o-a and o-b cross the line with the same orientation
    assert walk_field(cfg, b) - walk_field(cfg, a) == 0.0
    assert walk_field_difference(cfg, a, b) == 0.0


def test_outside_region_rejected(rng):
    cfg = random_config(rng, halfwidth=5.0)
    with pytest.raises(ValueError, match="outside"):
        walk_field(cfg, SpaceTimePoint(100.0, 0.0))


def test_crossing_decomposition(rng):
    # H(b) - H(a) equals the signed crossing sum of segment ab
    for _ in range(100):
        cfg = random_config(rng, signed_marks=True)
        a = SpaceTimePoint(*rng.uniform(-10, 10, 2))
        b = SpaceTimePoint(*rng.uniform(-10, 10, 2))
        lhs = (walk_field(cfg, b, compensated=True)
               - walk_field(cfg, a, compensated=True))
        rhs = walk_field_difference(cfg, a, b, compensated=True)
        scale = max(1.0, cfg.epsilon * float(np.abs(cfg.r).sum()))
        assert abs(lhs - rhs) <= 1e-12 * scale


def test_translation_covariance_of_differences(rng):
    for _ in range(50):
        cfg = random_config(rng, n=40)
        a = SpaceTimePoint(*rng.uniform(-8, 8, 2))
        b = SpaceTimePoint(*rng.uniform(-8, 8, 2))
        c = rng.uniform(-5, 5)
        shifted = make_config(cfg.x + c, cfg.v, cfg.r)
        base = walk_field_difference(cfg, a, b)
        moved = walk_field_difference(shifted, SpaceTimePoint(a.x + c, a.t),
                                      SpaceTimePoint(b.x + c, b.t))
        assert moved == pytest.approx(base, abs=1e-12)


def test_mandelbrot_variant_not_translation_covariant():
    # single line at x=1: crossing-count differences change when the whole
    # picture is shifted across the origin, walk-field differences do not
    cfg = make_config([1.0], [0.0], [1.0])
    a, b = SpaceTimePoint(0.5, 0.0), SpaceTimePoint(1.5, 0.0)
    d0 = mandelbrot_field(cfg, b) - mandelbrot_field(cfg, a)
    c = -2.0
    shifted = make_config([1.0 + c], [0.0], [1.0])
    d1 = (mandelbrot_field(shifted, SpaceTimePoint(b.x + c, 0.0))
          - mandelbrot_field(shifted, SpaceTimePoint(a.x + c, 0.0)))
    assert d0 != d1
    h0 = walk_field_difference(cfg, a, b)
    h1 = walk_field_difference(shifted, SpaceTimePoint(a.x + c, 0.0),
                               SpaceTimePoint(b.x + c, 0.0))
    assert h0 == h1


def test_slice_evaluator_bit_identical(rng):
    for _ in range(20):
        cfg = random_config(rng, n=200)
        t = rng.uniform(-10, 10)
        ev = SliceEvaluator(cfg, t)
        for x in rng.uniform(-15, 15, 8):
            assert ev.value(float(x)) == walk_field(cfg, SpaceTimePoint(float(x), t))


def test_grid_dump_shape(rng):
    cfg = random_config(rng)
    xs = np.linspace(-5, 5, 7)
    ts = np.linspace(-2, 2, 5)
    grid = walk_field_grid(cfg, xs, ts)
    assert grid.shape == (5, 7)
    assert grid[2, 3] == walk_field(cfg, SpaceTimePoint(float(xs[3]), float(ts[2])))


def test_marginal_generator_jumps(rng):
    # along the line (x0, v0), the height jumps exactly at crossings with the
    # other lines: +r for slower lines, -r for faster ones
    cfg = make_config([-1.0, 2.0, 0.3], [0.5, -0.8, 0.1], [0.3, 0.7, 0.2],
                      halfwidth=50.0)
    x0, v0 = 0.0, 1.0
    for j in range(3):
        w, xj, rj = cfg.v[j], cfg.x[j], cfg.r[j]
        tau = (xj - x0) / (v0 - w)
        before = walk_field(cfg, SpaceTimePoint(x0 + v0 * (tau - 1e-9), tau - 1e-9))
        after = walk_field(cfg, SpaceTimePoint(x0 + v0 * (tau + 1e-9), tau + 1e-9))
        want = rj if w < v0 else -rj
        assert after - before == pytest.approx(want, abs=1e-12)


def test_limit_field_examples(reference_model):
    assert limit_field(reference_model, ORIGIN) == 0.0
    # symmetric velocity law: vertical segments balance
    assert limit_field(reference_model, SpaceTimePoint(0.0, 1.7)) == pytest.approx(
        0.0, abs=1e-10)
    # horizontal segment: all crossings oriented the same way
    assert limit_field(reference_model, SpaceTimePoint(2.5, 0.0)) == pytest.approx(
        2.5, abs=1e-9)


def test_limit_field_against_mc(reference_model):
    b = SpaceTimePoint(0.8, 0.9)
    region = ObservationRegion((0.0, 1.0), (0.0, 1.0))
    eps = 1e-3
    vals = [walk_field(sample(reference_model, eps, region, 3, (i,)), b)
            for i in range(200)]
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert np.mean(vals) == pytest.approx(limit_field(reference_model, b),
                                          abs=4 * se)


def test_euler_fluctuation_centered_with_limit_variance(reference_model):
    b = SpaceTimePoint(0.0, 1.0)
    region = ObservationRegion((0.0, 1.0), (0.0, 1.0))
    eps, M = 1e-2, 3000
    vals = np.array([
        euler_fluctuation(sample(reference_model, eps, region, 11, (i,)),
                          reference_model, b)
        for i in range(M)])
    se_mean = vals.std(ddof=1) / math.sqrt(M)
    assert vals.mean() == pytest.approx(0.0, abs=4 * se_mean)
    var = vals.var(ddof=1)
    target = distance(reference_model, ORIGIN, b)  # = 1/2
    se_var = np.std((vals - vals.mean()) ** 2, ddof=1) / math.sqrt(M)
    assert var == pytest.approx(target, abs=4 * se_var)


def test_diffusive_fluctuations_vanish_at_frame(reference_model):
    region = ObservationRegion((-1.0, 1.0), (-1.0, 1.0))
    cfg = sample(reference_model, 1e-2, region, 2)
    frame = SpaceTimePoint(0.3, 0.2)
    eh, et = diffusive_fluctuations(cfg, reference_model, frame, ORIGIN)
    assert eh == 0.0 and et == 0.0


def test_diffusive_hat_variance(reference_model):
    # Var eta_hat(x, 0) = |x| for the homogeneous unit model
    region = ObservationRegion((-1.5, 1.5), (0.0, 0.5))
    eps, M, x = 0.05, 2000, 1.0
    frame = SpaceTimePoint(0.0, 0.25)
    offset = SpaceTimePoint(x, 0.0)
    vals = np.array([
        diffusive_fluctuations(sample(reference_model, eps**2, region, 21, (i,)),
                               reference_model, frame, offset)[0]
        for i in range(M)])
    var = vals.var(ddof=1)
    se = np.std((vals - vals.mean()) ** 2, ddof=1) / math.sqrt(M)
    assert var == pytest.approx(abs(x), abs=4 * se)
