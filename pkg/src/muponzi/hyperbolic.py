"""Poincare disk geometry: distances, areas, hyperbolic trigonometry and an
area integrator in geodesic polar coordinates.

The curvature is -1: ``ds = 2|dz| / (1 - |z|^2)`` and the area element is
``4 dx dy / (1 - x^2 - y^2)^2``. Points are passed around as complex numbers
(scalars or numpy arrays); :class:`DiskPoint` is the validated scalar form.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

# Largest |z| accepted as "inside the disk". Geodesic radius ~ 36.7.
_MAX_ABS = 1.0 - 1e-15


class GeometryError(ValueError):
    pass


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DiskPoint:
    x: float
    y: float

    def __post_init__(self):
        if not self.x * self.x + self.y * self.y < 1.0:
            raise GeometryError(f"({self.x}, {self.y}) is not inside the open unit disk")

    @classmethod
    def from_polar(cls, r: float, theta: float = 0.0) -> "DiskPoint":
        """Point at geodesic distance ``r`` from the origin in direction ``theta``."""
        if r < 0:
            raise GeometryError("geodesic radius must be non-negative")
        t = math.tanh(r / 2)
        return cls(t * math.cos(theta), t * math.sin(theta))

    @classmethod
    def from_complex(cls, z: complex) -> "DiskPoint":
        return cls(float(z.real), float(z.imag))

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @property
    def r(self) -> float:
        return float(distance(0j, self.z))

    @property
    def theta(self) -> float:
        return math.atan2(self.y, self.x)

    def __complex__(self) -> complex:
        return self.z


def as_complex(p):
    if isinstance(p, DiskPoint):
        return p.z
    if isinstance(p, (list, tuple)) and p and isinstance(p[0], DiskPoint):
        return np.array([q.z for q in p])
    return p


def _check_inside(z) -> None:
    if np.any(np.abs(z) >= _MAX_ABS):
        raise GeometryError("point on or outside the boundary of the disk")


def polar_point(r, theta):
    """Complex coordinate of the point at geodesic polar position (r, theta)."""
    return np.tanh(np.asarray(r) / 2) * np.exp(1j * np.asarray(theta))


def distance(z1, z2):
    """Hyperbolic distance, vectorised over complex inputs.

    Uses ``sinh(d/2) = |z1 - z2| / sqrt((1 - |z1|^2)(1 - |z2|^2))``, which is
    the Mobius-invariant extension of ``d(0, z) = log((1 + |z|)/(1 - |z|))``
    and stays accurate for nearby points.
    """
    z1 = np.asarray(as_complex(z1), dtype=complex)
    z2 = np.asarray(as_complex(z2), dtype=complex)
    _check_inside(z1)
    _check_inside(z2)
    a1 = np.abs(z1)
    a2 = np.abs(z2)
    q = np.abs(z1 - z2) / np.sqrt((1 - a1) * (1 + a1) * (1 - a2) * (1 + a2))
    d = 2.0 * np.arcsinh(q)
    return d if d.ndim else float(d)


def radius_from_origin(z):
    """d(0, z) = 2 artanh |z|."""
    z = np.asarray(as_complex(z), dtype=complex)
    _check_inside(z)
    d = 2.0 * np.arctanh(np.abs(z))
    return d if d.ndim else float(d)


def translate(center, u):
    """Mobius isometry sending 0 to ``center``, applied to ``u``."""
    c = complex(as_complex(center))
    return (u + c) / (1 + np.conj(c) * u)


def ball_volume(R: float) -> float:
    """Area of a closed geodesic ball of radius ``R``."""
    if R < 0:
        raise GeometryError("ball radius must be non-negative")
    return 2.0 * math.pi * (math.cosh(R) - 1.0)


def triangle_area(alpha: float, beta: float, gamma: float) -> float:
    """Gauss-Bonnet: area of a geodesic triangle from its angles."""
    if min(alpha, beta, gamma) < 0:
        raise GeometryError("angles must be non-negative")
    s = alpha + beta + gamma
    if s >= math.pi:
        raise GeometryError(f"angle sum {s} is not below pi")
    return math.pi - s


def angle_from_sides(a: float, b: float, c: float, tol: float = 1e-12) -> float:
    """Angle opposite side ``c`` (first law of cosines)."""
    if min(a, b, c) <= 0:
        raise GeometryError("side lengths must be positive")
    cos_g = (math.cosh(a) * math.cosh(b) - math.cosh(c)) / (math.sinh(a) * math.sinh(b))
    if abs(cos_g) > 1 + tol:
        raise GeometryError(f"sides ({a}, {b}, {c}) violate the triangle inequality")
    return math.acos(min(1.0, max(-1.0, cos_g)))


def side_from_angle(a: float, b: float, gamma: float) -> float:
    """Side opposite ``gamma``; inverse of :func:`angle_from_sides`."""
    cosh_c = math.cosh(a) * math.cosh(b) - math.sinh(a) * math.sinh(b) * math.cos(gamma)
    return math.acosh(cosh_c)


@dataclass(frozen=True)
class LensGeometry:
    r: float
    alpha: float
    beta: float
    lens_area: float

    def cosines(self) -> tuple[float, float]:
        """(cos alpha, cos beta) as given by the first law of cosines."""
        r = self.r
        ca = (math.cosh(r) ** 2 - math.cosh(1.0)) / math.sinh(r) ** 2
        cb = (math.cosh(r) * math.cosh(1.0) - math.cosh(r)) / (math.sinh(r) * math.sinh(1.0))
        return ca, cb

    def intersection_points(self, theta: float = 0.0) -> tuple[complex, complex]:
        """p+ and p-: where C_r(0) meets C_1(z) for z at angle ``theta``."""
        t = math.tanh(self.r / 2)
        return (t * np.exp(1j * (theta + self.alpha)), t * np.exp(1j * (theta - self.alpha)))


def lens_geometry(r: float) -> LensGeometry:
    """Region {w : d(z, w) <= 1, d(0, w) < d(0, z)} for ``d(0, z) = r``.

    The angles come from the isosceles triangle (0, z, p+) with sides r, r, 1.
    Closed forms equivalent to the arccos expressions but stable for large r:
    ``sin(alpha/2) = sinh(1/2)/sinh(r)`` and ``cos(beta) = tanh(1/2)/tanh(r)``.
    """
    if not r > 0.5:
        raise GeometryError(f"circles C_r(0) and C_1(z) only cross for r > 1/2, got r={r}")
    alpha = 2.0 * math.asin(min(1.0, math.sinh(0.5) / math.sinh(r)))
    t, T = math.tanh(0.5), math.tanh(r)
    beta = math.atan2(math.sqrt(max(0.0, (T - t) * (T + t))), t)
    area = 2 * alpha * math.cosh(r) + 2 * beta * (math.cosh(1.0) + 1) - 2 * math.pi
    return LensGeometry(r=r, alpha=alpha, beta=beta, lens_area=area)


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureSpec:
    method: str = "adaptive_polar"
    abs_tol: float = 1e-8
    seed: int = 0
    max_evals: int = 400_000
    ray_samples: int | None = None

    def __post_init__(self):
        if self.method not in ("adaptive_polar", "monte_carlo"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_evals < 17 or (self.ray_samples is not None and self.ray_samples < 4):
            raise ValueError("max_evals and ray_samples are too small")

    def samples_per_ray(self, radius: float = 1.0) -> int:
        """Jump-search samples on a ray of the given length.

        Chords shorter than the sample spacing can be missed. Where two jump
        curves cross at a shallow angle the lost area grows like spacing^2, so
        the spacing is fixed per unit length and tightened with the tolerance.
        """
        if self.ray_samples is not None:
            return self.ray_samples
        if self.abs_tol >= 1e-6:
            per_unit = 128
        else:
            per_unit = 256 if self.abs_tol >= 1e-8 else 512
        return per_unit * max(1, math.ceil(radius - 1e-9))


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    evals: int
    method: str

    def __float__(self) -> float:
        return self.value


# 15-point Kronrod nodes/weights on [-1, 1] with the embedded 7-point Gauss rule
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970])
_WG = np.zeros(15)
_WG[1::2] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
             0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
             0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
             0.129484966168869693270611432679082]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_EPS = np.finfo(float).eps


def _ray_integrals(f, weight, center, radius, thetas, n_samples, rho_tol=0.0):
    """For each angle, integrate ``f * weight * sinh(rho)`` over rho in [0, radius].

    ``f`` is assumed piecewise constant along rays; its jumps are located by
    sampling and bisection and each piece is integrated separately.
    """
    m = thetas.size
    rho = np.linspace(0.0, radius, n_samples)
    dirs = np.exp(1j * thetas)
    pts = translate(center, np.tanh(rho / 2)[None, :] * dirs[:, None])
    vals = np.asarray(f(pts), dtype=float)
    rows, cols = np.nonzero(vals[:, 1:] != vals[:, :-1])
    lo = rho[cols].copy()
    hi = rho[cols + 1].copy()
    if rows.size:
        left = vals[rows, cols]
        d = dirs[rows]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            same = np.asarray(f(translate(center, np.tanh(mid / 2) * d)), dtype=float) == left
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
            if np.all(hi - lo <= max(rho_tol, 4 * _EPS * radius)):
                break
    cuts_ray = np.concatenate([np.arange(m), np.arange(m), rows])
    cuts_pos = np.concatenate([np.zeros(m), np.full(m, radius), 0.5 * (lo + hi)])
    order = np.lexsort((cuts_pos, cuts_ray))
    cuts_ray, cuts_pos = cuts_ray[order], cuts_pos[order]
    keep = cuts_ray[1:] == cuts_ray[:-1]
    p_ray = cuts_ray[:-1][keep]
    a = cuts_pos[:-1][keep]
    b = cuts_pos[1:][keep]
    nonempty = b > a
    p_ray, a, b = p_ray[nonempty], a[nonempty], b[nonempty]
    pd = dirs[p_ray]
    # value each piece at a ray sample strictly inside it; a midpoint could land
    # in a chord too short for the sampling to have detected
    j = np.searchsorted(rho, a, side="right")
    has_sample = (j < n_samples) & (rho[np.minimum(j, n_samples - 1)] < b)
    mid_val = np.where(has_sample, vals[p_ray, np.minimum(j, n_samples - 1)], 0.0)
    if not np.all(has_sample):
        sel = ~has_sample
        mid_val[sel] = np.asarray(f(translate(center, np.tanh((a[sel] + b[sel]) / 4) * pd[sel])),
                                  dtype=float)
    if weight is None:
        piece = mid_val * (np.cosh(b) - np.cosh(a))
    else:
        half = 0.5 * (b - a)
        nodes = 0.5 * (a + b)[:, None] + half[:, None] * _GL_X[None, :]
        wpts = translate(center, np.tanh(nodes / 2) * pd[:, None])
        g = np.asarray(weight(wpts), dtype=float)
        piece = mid_val * half * np.sum(_GL_W[None, :] * g * np.sinh(nodes), axis=1)
    out = np.zeros(m)
    np.add.at(out, p_ray, piece)
    # signature of the run values along each ray (slivers from ties are ignored);
    # it changes wherever the ray integral can have a kink in theta, including
    # where two jump curves swap order without changing the number of jumps
    long = (b - a) > 1e-9 * radius
    lr, lv = p_ray[long], mid_val[long]
    start = np.ones(lr.size, dtype=bool)
    start[1:] = (lr[1:] != lr[:-1]) | (lv[1:] != lv[:-1])
    rr, rv = lr[start], lv[start]
    idx = np.arange(rr.size)
    first = np.ones(rr.size, dtype=bool)
    first[1:] = rr[1:] != rr[:-1]
    k = idx - np.maximum.accumulate(np.where(first, idx, 0))
    runs = np.bincount(rr, minlength=m)
    mix = np.bincount(rr, weights=rv * np.sqrt(k + 2.0), minlength=m)
    return out, runs + 1j * mix


def _check_bounded(f, center, radius):
    thetas = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    outside = translate(center, np.tanh(radius * (1 + 1e-6) / 2 + 1e-9) * np.exp(1j * thetas))
    if np.any(np.asarray(f(outside), dtype=float) != 0):
        raise GeometryError("region is not contained in the declared bounding ball")


def integrate_ball(f: Callable, center, radius: float, spec: QuadratureSpec = QuadratureSpec(),
                   weight: Callable | None = None) -> QuadResult:
    """Integrate ``f * weight`` against hyperbolic area over the ball B(center, radius).

    ``f`` is a vectorised, piecewise-constant function of complex points (an
    indicator or a sum of weighted indicators). ``weight`` is an optional
    smooth vectorised factor.
    """
    if not (radius >= 0 and math.isfinite(radius)):
        raise GeometryError("region must lie in a finite bounding ball")
    center = complex(as_complex(center))
    _check_inside(np.asarray(center))
    if radius == 0:
        return QuadResult(0.0, 0.0, 0, spec.method)
    _check_inside(translate(center, np.array([math.tanh(radius / 2)])))
    _check_bounded(f, center, radius)
    if spec.method == "monte_carlo":
        return _monte_carlo(f, weight, center, radius, spec)
    return _adaptive_polar(f, weight, center, radius, spec)


def _adaptive_polar(f, weight, center, radius, spec):
    evals = 0
    # a jump misplaced by d rho moves a ray integral by at most |jump| sinh(radius) d rho;
    # keep the total effect of all cut errors far below abs_tol
    rho_tol = 1e-4 * spec.abs_tol / max(1.0, math.sinh(radius))

    def gk(a, b):
        nonlocal evals
        c, h = 0.5 * (a + b), 0.5 * (b - a)
        thetas = np.concatenate([c + h * _XK, [a, b]])
        vals, sig = _ray_integrals(f, weight, center, radius, thetas, spec.samples_per_ray(radius), rho_tol)
        evals += 17
        kinked = np.any(sig != sig[0])
        fx = vals[:15]
        k = h * float(np.dot(_WK, fx))
        g = h * float(np.dot(_WG, fx))
        err = max(abs(k - g), 50 * _EPS * abs(k), 50 * _EPS * h * float(np.max(np.abs(fx))))
        if kinked:
            # a ray inside the interval is tangent to a jump curve or crosses where
            # two curves meet: the angular integrand has a kink Gauss-Kronrod cannot see
            err = max(err, h * float(np.max(vals) - np.min(vals)))
        return k, err

    heap = []
    n0 = 8
    edges = np.linspace(0.0, 2 * np.pi, n0 + 1)
    total = 0.0
    total_err = 0.0
    for i in range(n0):
        k, e = gk(edges[i], edges[i + 1])
        heapq.heappush(heap, (-e, edges[i], edges[i + 1], k))
        total += k
        total_err += e
    # splitting never lowers the summed roundoff floor 50 eps sum|k|
    floor = 50 * _EPS * math.fsum(abs(item[3]) for item in heap)
    if spec.abs_tol < floor:
        raise QuadratureError(
            f"abs_tol={spec.abs_tol:g} is below the roundoff floor {floor:.3g} of this integral")
    while total_err > spec.abs_tol:
        if evals + 34 > spec.max_evals:
            raise QuadratureError(
                f"abs_tol={spec.abs_tol:g} not reached within {spec.max_evals} ray evaluations "
                f"(estimate {total:.12g} +/- {total_err:.3g})")
        neg_e, a, b, k = heapq.heappop(heap)
        m = 0.5 * (a + b)
        k1, e1 = gk(a, m)
        k2, e2 = gk(m, b)
        heapq.heappush(heap, (-e1, a, m, k1))
        heapq.heappush(heap, (-e2, m, b, k2))
        total += k1 + k2 - k
        total_err += e1 + e2 + neg_e
    # re-sum to shed accumulated cancellation error
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    return QuadResult(total, total_err, evals, "adaptive_polar")


def _monte_carlo(f, weight, center, radius, spec):
    rng = np.random.default_rng(spec.seed)
    n = spec.max_evals
    vol = ball_volume(radius)
    chunk = 200_000
    s1 = 0.0
    s2 = 0.0
    done = 0
    while done < n:
        k = min(chunk, n - done)
        u = rng.random(k)
        th = rng.random(k) * 2 * np.pi
        rho = np.arccosh(1.0 + u * (math.cosh(radius) - 1.0))
        pts = translate(center, np.tanh(rho / 2) * np.exp(1j * th))
        v = np.asarray(f(pts), dtype=float)
        if weight is not None:
            v = v * np.asarray(weight(pts), dtype=float)
        s1 += float(v.sum())
        s2 += float((v * v).sum())
        done += k
    mean = s1 / n
    var = max(0.0, s2 / n - mean * mean)
    return QuadResult(vol * mean, vol * math.sqrt(var / n), n, "monte_carlo")


def area_integral(region: Callable, center, bound_radius: float,
                  spec: QuadratureSpec = QuadratureSpec()) -> QuadResult:
    """Hyperbolic area of ``{w : region(w)}``, a subset of B(center, bound_radius)."""
    def indicator(w):
        return np.asarray(region(w), dtype=float)
    return integrate_ball(indicator, center, bound_radius, spec)


# ---------------------------------------------------------------------------
# regions used by the lens decomposition


def klein(z):
    """Poincare -> Klein model, where geodesics are straight chords."""
    z = np.asarray(z, dtype=complex)
    return 2 * z / (1 + np.abs(z) ** 2)


def geodesic_triangle(a, b, c) -> Callable:
    """Membership predicate for the closed geodesic triangle with vertices a, b, c."""
    ka, kb, kc = (complex(klein(as_complex(p))) for p in (a, b, c))

    def cross(p, q, w):
        return (q - p).real * (w - p).imag - (q - p).imag * (w - p).real

    orient = np.sign(cross(ka, kb, kc))

    def inside(w):
        k = klein(w)
        tol = -1e-14
        return ((orient * cross(ka, kb, k) >= tol) & (orient * cross(kb, kc, k) >= tol)
                & (orient * cross(kc, ka, k) >= tol))
    return inside


def geodesic_sector(center, radius: float, direction: float, half_angle: float) -> Callable:
    """Sector of B(center, radius) within ``half_angle`` of the tangent direction ``direction``."""
    c = complex(as_complex(center))

    def inside(w):
        u = (w - c) / (1 - np.conj(c) * w)
        ang = np.angle(u * np.exp(-1j * direction))
        return (distance(c, w) <= radius) & (np.abs(ang) <= half_angle)
    return inside


def direction_towards(center, target) -> float:
    """Tangent direction at ``center`` of the geodesic to ``target``."""
    c = complex(as_complex(center))
    t = complex(as_complex(target))
    return float(np.angle((t - c) / (1 - np.conj(c) * t)))
