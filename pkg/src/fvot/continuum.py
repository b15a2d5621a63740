"""One-dimensional continuum oracles: densities, quantiles, W2 and the dual action.

Also hosts a small linear-programming W2 oracle for atomic measures in any
dimension.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linprog
from scipy.spatial.distance import cdist

from fvot._quad import GL_W, GL_X, integrate
from fvot.errors import InvalidArgument, SolverFailure

NORM_TOL = 1e-10
LP_MAX_ATOMS = 200


def _invert(cdf, pdf, p, a, b, iters=200):
    """Safeguarded Newton solve of ``cdf(x) = p`` on ``[a, b]``."""
    p = np.asarray(p, dtype=float)
    lo = np.full(p.shape, float(a))
    hi = np.full(p.shape, float(b))
    x = a + p * (b - a)
    for _ in range(iters):
        fx = cdf(x) - p
        lo = np.where(fx <= 0, x, lo)
        hi = np.where(fx >= 0, x, hi)
        step = x - fx / np.maximum(pdf(x), 1e-300)
        bad = ~((step > lo) & (step < hi))
        x_new = np.where(bad, 0.5 * (lo + hi), step)
        if np.all(np.abs(x_new - x) <= 4e-16 * max(abs(a), abs(b), 1.0)):
            return x_new
        x = x_new
    return x


class Density1D:
    """Probability density on ``[a, b]``.

    Subclasses provide ``pdf``, ``cdf`` and ``quantile`` (vectorised) and may
    override ``kinks`` with the points where ``u`` fails to be smooth.
    """

    a = 0.0
    b = 1.0
    delta = 0.0
    lipschitz = math.inf
    label = ""

    def __call__(self, x):
        return self.pdf(x)

    def kinks(self):
        return np.array([self.a, self.b])

    def quantile_kinks(self):
        return np.clip(self.cdf(self.kinks()), 0.0, 1.0)

    def integral(self, x):
        return self.cdf(x)

    def quantile(self, p):
        return _invert(self.cdf, self.pdf, p, self.a, self.b)

    def in_pdelta(self, delta):
        """Membership in the class of densities ``u >= delta`` with ``Lip(u) <= 1/delta``."""
        return delta > 0 and self.delta >= delta and self.lipschitz <= 1.0 / delta

    def __repr__(self):
        return f"{type(self).__name__}({self.label or ''})"


class CallableDensity(Density1D):
    """Closed-form density with its distribution function."""

    def __init__(self, pdf, cdf, a=0.0, b=1.0, delta=0.0, lipschitz=math.inf, quantile=None,
                 label=""):
        self._pdf, self._cdf, self._quantile = pdf, cdf, quantile
        self.a, self.b, self.delta, self.lipschitz, self.label = a, b, delta, lipschitz, label
        total = float(cdf(np.array(b)) - cdf(np.array(a)))
        if abs(total - 1.0) > NORM_TOL:
            raise InvalidArgument(f"density integrates to {total!r}, not 1")

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), self._pdf(np.clip(x, self.a, self.b)), 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.a, self.b)
        return self._cdf(x) - self._cdf(np.asarray(self.a))

    def quantile(self, p):
        if self._quantile is not None:
            return self._quantile(np.clip(np.asarray(p, dtype=float), 0.0, 1.0))
        return super().quantile(p)


class PiecewiseLinearDensity(Density1D):
    """Continuous piecewise-linear density through ``(xs[i], us[i])``."""

    def __init__(self, xs, us, normalize=False, label=""):
        xs = np.asarray(xs, dtype=float)
        us = np.asarray(us, dtype=float)
        if xs.ndim != 1 or xs.shape != us.shape or len(xs) < 2 or np.any(np.diff(xs) <= 0):
            raise InvalidArgument("need increasing nodes and matching values")
        if np.any(us < 0) or not np.all(np.isfinite(us)):
            raise InvalidArgument("density values must be finite and nonnegative")
        h = np.diff(xs)
        mass = np.concatenate([[0.0], np.cumsum(0.5 * h * (us[:-1] + us[1:]))])
        if normalize:
            us, mass = us / mass[-1], mass / mass[-1]
        elif abs(mass[-1] - 1.0) > NORM_TOL:
            raise InvalidArgument(f"density integrates to {mass[-1]!r}, not 1")
        self.xs, self.us, self._mass, self._h = xs, us, mass, h
        self._slope = np.diff(us) / h
        self.a, self.b = float(xs[0]), float(xs[-1])
        self.delta = float(us.min())
        self.lipschitz = float(np.abs(self._slope).max())
        self.label = label

    def kinks(self):
        return self.xs

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), np.interp(x, self.xs, self.us), 0.0)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.a, self.b)
        j = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self._h) - 1)
        y = x - self.xs[j]
        return self._mass[j] + self.us[j] * y + 0.5 * self._slope[j] * y * y

    def quantile(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        j = np.clip(np.searchsorted(self._mass, p, side="right") - 1, 0, len(self._h) - 1)
        q = p - self._mass[j]
        u, c = self.us[j], self._slope[j]
        disc = np.sqrt(np.maximum(u * u + 2 * c * q, 0.0))
        den = u + disc
        y = np.where(den > 0, 2 * q / np.where(den > 0, den, 1.0), 0.0)
        return np.minimum(self.xs[j] + y, self.xs[j + 1])


class PiecewiseConstantDensity(Density1D):
    """Density constant on each interval ``[breaks[i], breaks[i+1]]``."""

    def __init__(self, breaks, values, label=""):
        breaks = np.asarray(breaks, dtype=float)
        values = np.asarray(values, dtype=float)
        if breaks.ndim != 1 or len(breaks) != len(values) + 1 or np.any(np.diff(breaks) <= 0):
            raise InvalidArgument("need increasing breaks, one more than values")
        if np.any(values < 0):
            raise InvalidArgument("density values must be nonnegative")
        mass = np.concatenate([[0.0], np.cumsum(np.diff(breaks) * values)])
        if abs(mass[-1] - 1.0) > NORM_TOL:
            raise InvalidArgument(f"density integrates to {mass[-1]!r}, not 1")
        self.breaks, self.values, self._mass = breaks, values, mass
        self.a, self.b = float(breaks[0]), float(breaks[-1])
        self.delta = float(values.min())
        self.lipschitz = 0.0 if np.all(values == values[0]) else math.inf
        self.label = label

    @classmethod
    def from_cells(cls, cell_density):
        """The embedding of a 1D :class:`~fvot.mesh.CellDensity`."""
        return cls(cell_density.breaks, cell_density.sorted_values)

    def kinks(self):
        return self.breaks

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        j = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.values) - 1)
        return np.where((x >= self.a) & (x <= self.b), self.values[j], 0.0)

    def cdf(self, x):
        return np.interp(x, self.breaks, self._mass)

    def quantile(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        live = np.concatenate([[True], np.diff(self._mass) > 0])
        return np.interp(p, self._mass[live], self.breaks[live])


class Atoms:
    """Finite atomic probability measure on the line."""

    def __init__(self, x, w):
        x = np.asarray(x, dtype=float).ravel()
        w = np.asarray(w, dtype=float).ravel()
        if x.shape != w.shape or not len(x) or np.any(w < 0):
            raise InvalidArgument("atoms need matching positions and nonnegative masses")
        if abs(w.sum() - 1.0) > NORM_TOL:
            raise InvalidArgument(f"atom masses sum to {w.sum()!r}, not 1")
        order = np.argsort(x, kind="stable")
        self.x, self.w = x[order], w[order]
        self._cum = np.cumsum(self.w)

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    def quantile(self, p):
        j = np.searchsorted(self._cum, np.asarray(p, float), side="left")
        return self.x[np.clip(j, 0, len(self.x) - 1)]

    def quantile_kinks(self):
        return np.concatenate([[0.0], np.clip(self._cum, 0.0, 1.0)])

    def cdf(self, x):
        j = np.searchsorted(self.x, np.asarray(x, float), side="right")
        return np.concatenate([[0.0], self._cum])[j]


class GeodesicDensity(Density1D):
    """``mu_t`` on the W2 geodesic, represented by its exact quantile function
    ``(1 - t) Q0 + t Q1``; the density is ``1 / (d/dp) Q_t``."""

    def __init__(self, mu0, mu1, t):
        self.mu0, self.mu1, self.t = mu0, mu1, float(t)
        self.a = min(mu0.a, mu1.a)
        self.b = max(mu0.b, mu1.b)
        # 1/u_t = (1-t)/u0 + t/u1 along the coupling
        self.delta = min(mu0.delta, mu1.delta)
        self.lipschitz = math.nan
        self.label = f"geodesic(t={t:g})"

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        return (1 - self.t) * self.mu0.quantile(p) + self.t * self.mu1.quantile(p)

    def _dq(self, p):
        q0, q1 = self.mu0.quantile(p), self.mu1.quantile(p)
        return (1 - self.t) / self.mu0.pdf(q0) + self.t / self.mu1.pdf(q1)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.a, self.b)
        p = _invert(self.quantile, self._dq, np.atleast_1d(x), 0.0, 1.0)
        return p.reshape(x.shape) if x.ndim else float(p[0])

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.quantile(0.0)) & (x <= self.quantile(1.0))
        return np.where(inside, 1.0 / self._dq(np.atleast_1d(self.cdf(x)).reshape(x.shape)), 0.0)

    def quantile_kinks(self):
        return np.unique(np.concatenate([self.mu0.quantile_kinks(), self.mu1.quantile_kinks()]))

    def kinks(self):
        return self.quantile(self.quantile_kinks())

    def on_grid(self, n=2001):
        """Piecewise-linear interpolation of ``u_t`` at ``n`` quantile levels."""
        p = np.unique(np.concatenate([np.linspace(0, 1, n), self.quantile_kinks()]))
        x, keep = np.unique(self.quantile(p), return_index=True)
        return PiecewiseLinearDensity(x, 1.0 / self._dq(p[keep]), normalize=True, label=self.label)


class SignedFunction1D:
    """A signed function with its antiderivative ``integral(x) = int_a^x f``."""

    def __init__(self, f, integral, a=0.0, b=1.0):
        self.f, self._F, self.a, self.b = f, integral, a, b

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    def integral(self, x):
        return self._F(np.asarray(x, dtype=float)) - self._F(np.asarray(self.a, dtype=float))

    @classmethod
    def difference(cls, mu1, mu0, scale=1.0):
        """``scale * (mu1 - mu0)`` for two densities on a common interval."""
        return cls(lambda x: scale * (mu1.pdf(x) - mu0.pdf(x)),
                   lambda x: scale * (mu1.cdf(x) - mu0.cdf(x)), min(mu0.a, mu1.a), max(mu0.b, mu1.b))


def _antiderivative(w, a, b, n=2048):
    """Return ``W(x) = int_a^x w`` using 8-point Gauss-Legendre panels."""
    if hasattr(w, "integral"):
        return w.integral
    edges = np.linspace(a, b, n + 1)
    half = 0.5 * np.diff(edges)
    nodes = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * GL_X
    panel = half * (np.asarray(w(nodes.ravel()), float).reshape(nodes.shape) @ GL_W)
    cum = np.concatenate([[0.0], np.cumsum(panel)])

    def W(x):
        x = np.clip(np.asarray(x, dtype=float), a, b)
        j = np.clip(((x - a) / (b - a) * n).astype(int), 0, n - 1)
        lo = edges[j]
        hh = 0.5 * (x - lo)
        pts = (lo + hh)[..., None] + hh[..., None] * GL_X
        return cum[j] + hh * (np.asarray(w(pts), float) @ GL_W)

    return W


def dual_action_1d(mu, w, tol=1e-10):
    """``int W^2 / u`` with ``W(x) = int_a^x w``, the 1D dual action.

    ``w`` is a vectorised callable with zero integral; an ``integral``
    attribute (antiderivative) is used when present.
    """
    a, b = mu.a, mu.b
    kinks = np.unique(np.concatenate([mu.kinks(), np.linspace(a, b, 9)]))
    if mu.delta <= 0 or np.min(mu.pdf(kinks)) <= 0:
        raise InvalidArgument("density must be bounded away from zero")
    W = _antiderivative(w, a, b)
    if abs(float(W(np.asarray(b)))) > 1e-8:
        raise InvalidArgument("w must have zero integral")
    return integrate(lambda x: W(x) ** 2 / mu.pdf(x), kinks, tol)


def _as_measure(mu):
    if isinstance(mu, (Density1D, Atoms)):
        return mu
    return Atoms.from_pairs(mu)


def w2_1d(mu0, mu1, tol=1e-10):
    """``W2`` on the line from the quantile coupling, ``int_0^1 (Q0 - Q1)^2``."""
    mu0, mu1 = _as_measure(mu0), _as_measure(mu1)
    kinks = np.unique(np.concatenate([[0.0, 1.0], mu0.quantile_kinks(), mu1.quantile_kinks()]))
    val = integrate(lambda p: (mu0.quantile(p) - mu1.quantile(p)) ** 2, kinks, tol * 1e-2)
    return math.sqrt(max(val, 0.0))


def w2_geodesic_1d(mu0, mu1, t):
    """The point at time ``t`` on the W2 geodesic from ``mu0`` to ``mu1``."""
    if not 0.0 <= t <= 1.0:
        raise InvalidArgument("t must lie in [0, 1]")
    if mu0.delta <= 0 or mu1.delta <= 0:
        raise InvalidArgument("geodesic densities need a positive lower bound")
    return GeodesicDensity(mu0, mu1, t)


def w2_lp_oracle(atoms0, atoms1):
    """Exact W2 between finite atomic measures via the transportation LP.

    Each argument is a sequence of ``(point, mass)`` pairs; points may be
    scalars or vectors of a common dimension.
    """
    (x0, w0), (x1, w1) = (_atoms_nd(a) for a in (atoms0, atoms1))
    if len(w0) > LP_MAX_ATOMS or len(w1) > LP_MAX_ATOMS:
        raise InvalidArgument(f"at most {LP_MAX_ATOMS} atoms per side")
    n0, n1 = len(w0), len(w1)
    C = cdist(x0, x1, "sqeuclidean").ravel()
    rows = np.zeros((n0 + n1, n0 * n1))
    for i in range(n0):
        rows[i, i * n1:(i + 1) * n1] = 1.0
    for j in range(n1):
        rows[n0 + j, j::n1] = 1.0
    res = linprog(C, A_eq=rows, b_eq=np.concatenate([w0, w1]), bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise SolverFailure(f"transport LP failed: {res.message}")
    return math.sqrt(max(res.fun, 0.0))


def _atoms_nd(atoms):
    pairs = list(atoms)
    if not pairs:
        raise InvalidArgument("empty atom list")
    x = np.array([np.atleast_1d(np.asarray(p[0], float)) for p in pairs])
    w = np.array([float(p[1]) for p in pairs])
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise InvalidArgument("atom masses must be nonnegative and sum to 1")
    return x, w


# ---- catalogue ---------------------------------------------------------------

def _affine(slope):
    s = float(slope)
    if abs(s) >= 2:
        raise InvalidArgument("affine slope must satisfy |s| < 2 for positivity")

    def quantile(p):
        c = 1 - s / 2
        return 2 * p / (c + np.sqrt(c * c + 2 * s * p))

    return CallableDensity(lambda x: 1 + s * (x - 0.5), lambda x: x + 0.5 * s * (x * x - x),
                           delta=1 - abs(s) / 2, lipschitz=abs(s), quantile=quantile,
                           label=f"affine:{s:g}")


def _sine(alpha, k):
    alpha = float(alpha)
    if not 0 <= alpha < 1:
        raise InvalidArgument("sine amplitude must lie in [0, 1)")
    if float(k) != int(k) or int(k) < 1:
        raise InvalidArgument("sine frequency must be a positive integer")
    k = int(k)
    w = 2 * math.pi * k
    return CallableDensity(lambda x: 1 + alpha * np.sin(w * x),
                           lambda x: x + alpha * (1 - np.cos(w * x)) / w,
                           delta=1 - alpha, lipschitz=w * alpha, label=f"sine:{alpha:g},{k}")


def _tent(c, width, beta):
    c, width, beta = float(c), float(width), float(beta)
    if width <= 0 or c - width < -1e-15 or c + width > 1 + 1e-15:
        raise InvalidArgument("tent must fit inside [0, 1]")
    if not 0 <= beta < 1:
        raise InvalidArgument("tent blend must lie in [0, 1)")
    xs = np.unique(np.clip([0.0, c - width, c, c + width, 1.0], 0.0, 1.0))
    us = (1 - beta) + beta * np.maximum(0.0, 1 - np.abs(xs - c) / width) / width
    return PiecewiseLinearDensity(xs, us, normalize=True, label=f"tent:{c:g},{width:g},{beta:g}")


_CATALOG = {"affine": (_affine, 1), "sine": (_sine, 2), "tent": (_tent, 3)}


def make_pdelta(kind, *params):
    """Catalogued smooth densities on ``[0, 1]`` bounded below.

    ``affine(s)``
        ``1 + s (x - 1/2)``, ``|s| < 2``; ``delta = 1 - |s|/2``, ``Lip = |s|``.
    ``sine(alpha, k)``
        ``1 + alpha sin(2 pi k x)``; ``delta = 1 - alpha``, ``Lip = 2 pi k alpha``.
    ``tent(c, w, beta)``
        ``(1 - beta) + beta * tent`` with a unit-mass tent of half-width ``w``
        centred at ``c``; ``delta = 1 - beta``, ``Lip = beta / w^2``.
    """
    if kind not in _CATALOG:
        raise InvalidArgument(f"unknown density kind {kind!r}")
    build, arity = _CATALOG[kind]
    if len(params) != arity:
        raise InvalidArgument(f"{kind} takes {arity} parameter(s)")
    return build(*params)


def parse_density(text):
    """Parse ``affine:<s>``, ``sine:<alpha>,<k>`` or ``tent:<c>,<w>,<beta>``."""
    kind, _, args = text.strip().partition(":")
    try:
        params = [float(v) for v in args.split(",")] if args else []
    except ValueError as exc:
        raise InvalidArgument(f"bad density parameters in {text!r}") from exc
    return make_pdelta(kind, *params)
