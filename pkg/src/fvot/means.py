"""Admissible means, their weights, and mean/weight functions on mesh edges.

A mean ``theta(a, b)`` is evaluated with the continuous extension to the
boundary of the quadrant.  Derivatives on the open quadrant are obtained from
1-homogeneity, ``theta(a, b) = b * phi(a / b)`` with ``phi(x) = theta(x, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from fvot.errors import InvalidArgument

KINDS = ("arithmetic", "geometric", "logarithmic", "harmonic", "custom")
_ALIASES = {"arith": "arithmetic", "geom": "geometric", "log": "logarithmic", "harm": "harmonic"}
_FD_STEP = 1e-6


def _log_phi_series(u, order):
    # phi(u) = (e^u - 1)/u = sum_k u^k / (k+1)!, and its u-derivatives
    out = np.zeros_like(u)
    for k in range(order, order + 14):
        coef = math.factorial(k) / math.factorial(k - order) / math.factorial(k + 1)
        out = out + coef * u ** (k - order)
    return out


def _log_phi(x):
    """phi, dphi/dx, d2phi/dx2 of the logarithmic mean at ``x > 0``."""
    u = np.log(x)
    small = np.abs(u) < 0.1
    us = np.where(small, 0.5, u)
    eu = np.exp(us)
    p0 = np.where(small, _log_phi_series(u, 0), np.expm1(us) / us)
    p1 = np.where(small, _log_phi_series(u, 1), (us * eu - np.expm1(us)) / us**2)
    p2 = np.where(
        small,
        _log_phi_series(u, 2),
        (us**2 * eu - 2 * us * eu + 2 * np.expm1(us)) / us**3,
    )
    return p0, p1 / x, (p2 - p1) / x**2


@dataclass(frozen=True)
class MeanSpec:
    """One admissible mean from the catalogue, or a validated custom mean.

    Parameters
    ----------
    kind : str
        ``arithmetic``, ``geometric``, ``logarithmic``, ``harmonic`` or
        ``custom``.
    lam : float
        Weight parameter in ``[0, 1]``; the logarithmic mean only supports
        ``0.5``.
    func : callable, optional
        Vectorised ``theta(a, b)`` for ``kind='custom'``.
    """

    kind: str
    lam: float = 0.5
    func: Optional[Callable] = field(default=None, compare=False, repr=False)
    label: str = ""

    def __post_init__(self):
        kind = _ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise InvalidArgument(f"unknown mean kind {self.kind!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidArgument(f"weight parameter must lie in [0, 1], got {self.lam}")
        if kind == "logarithmic" and self.lam != 0.5:
            raise InvalidArgument("only the unweighted logarithmic mean is supported")
        if kind == "custom" and self.func is None:
            raise InvalidArgument("custom mean needs a function")
        if kind != "custom":
            object.__setattr__(self, "lam", float(self.lam))

    @classmethod
    def parse(cls, text):
        """Parse ``arith:<lam>``, ``geom:<lam>``, ``harm:<lam>`` or ``log``."""
        name, _, arg = text.strip().partition(":")
        if name not in _ALIASES and name not in KINDS[:4]:
            raise InvalidArgument(f"unknown mean descriptor {text!r}")
        if not arg:
            return cls(name)
        try:
            return cls(name, float(arg))
        except ValueError as exc:
            raise InvalidArgument(f"bad weight in mean descriptor {text!r}") from exc

    @classmethod
    def custom(cls, func, label="custom", validate=True, sample_count=1000, seed=0):
        spec = cls("custom", 0.5, func, label)
        if validate:
            report = check_admissible(spec, sample_count, seed)
            if not report.passed:
                raise InvalidArgument(f"custom mean is not admissible: {report.failures()}")
        return spec

    @property
    def descriptor(self) -> str:
        if self.kind == "custom":
            return self.label or "custom"
        short = {v: k for k, v in _ALIASES.items()}[self.kind]
        return short if self.kind == "logarithmic" else f"{short}:{self.lam:g}"

    @property
    def symmetric(self) -> bool:
        return self.kind == "logarithmic" or (self.kind != "custom" and self.lam == 0.5)

    def __call__(self, a, b):
        return eval_mean(self, a, b)

    def reversed(self):
        """The mean ``(a, b) -> theta(b, a)``."""
        if self.kind == "custom":
            f = self.func
            return MeanSpec("custom", 0.5, lambda a, b: f(b, a), self.label + "~")
        if self.kind == "logarithmic":
            return self
        return MeanSpec(self.kind, 1.0 - self.lam)

    def phi(self, x):
        """``theta(x, 1)`` and its first two derivatives for ``x > 0``."""
        x = np.asarray(x, dtype=float)
        lam = self.lam
        if self.kind == "arithmetic":
            return lam * x + (1 - lam), np.full_like(x, lam), np.zeros_like(x)
        if self.kind == "geometric":
            return x**lam, lam * x ** (lam - 1), lam * (lam - 1) * x ** (lam - 2)
        if self.kind == "harmonic":
            den = lam + (1 - lam) * x
            return x / den, lam / den**2, -2 * lam * (1 - lam) / den**3
        if self.kind == "logarithmic":
            return _log_phi(x)
        h = _FD_STEP * np.maximum(x, 1.0)
        f = lambda y: np.asarray(self.func(y, np.ones_like(y)), float)  # noqa: E731
        f0, fp, fm = f(x), f(x + h), f(x - h)
        return f0, (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / h**2


def _check_inputs(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(np.isnan(a)) or np.any(np.isnan(b)) or np.any(a < 0) or np.any(b < 0):
        raise InvalidArgument("mean arguments must be nonnegative numbers")
    return a, b


def eval_mean(spec, a, b):
    """Evaluate ``theta(a, b)`` including its continuous extension at zero."""
    a, b = _check_inputs(a, b)
    lam = spec.lam
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if spec.kind == "arithmetic":
            out = lam * a + (1 - lam) * b
        elif spec.kind == "geometric":
            out = np.where(
                (a > 0) & (b > 0),
                a**lam * b ** (1 - lam),
                np.where(lam == 1.0, a, np.where(lam == 0.0, b, 0.0)),
            )
        elif spec.kind == "harmonic":
            den = lam * b + (1 - lam) * a
            out = np.where(den > 0, a * b / np.where(den > 0, den, 1.0), 0.0)
            if lam == 1.0:
                out = a.copy() if a.ndim else a
            elif lam == 0.0:
                out = b.copy() if b.ndim else b
        elif spec.kind == "logarithmic":
            pos = (a > 0) & (b > 0)
            safe_b = np.where(pos, b, 1.0)
            x = np.where(pos, a / safe_b, 1.0)
            out = np.where(pos, safe_b * _log_phi(x)[0], 0.0)
        else:
            out = np.asarray(spec.func(a, b), dtype=float)
    return out if np.ndim(out) else float(out)


def mean_partials(spec, a, b):
    """``theta, d1, d2, d11, d12, d22`` at positive ``(a, b)`` (arrays)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = a / b
    p, dp, ddp = spec.phi(x)
    theta = b * p
    return theta, dp, p - x * dp, ddp / b, -x * ddp / b, x * x * ddp / b


def weight_of(spec) -> float:
    """The weight ``d1 theta(1, 1)``."""
    if spec.kind in ("arithmetic", "geometric", "harmonic"):
        return spec.lam
    if spec.kind == "logarithmic":
        return 0.5
    h = _FD_STEP
    return float((spec.func(1 + h, 1.0) - spec.func(1 - h, 1.0)) / (2 * h))


@dataclass
class MeanCheckReport:
    """Worst relative violation per admissibility property."""

    violations: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(v <= self.tol for v in self.violations.values())

    def failures(self):
        return {k: v for k, v in self.violations.items() if v > self.tol}


def _fd5(f, h):
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)


def _theta(spec):
    return spec if isinstance(spec, MeanSpec) else MeanSpec("custom", 0.5, spec)


def check_admissible(spec, sample_count=10_000, seed=0, tol=1e-8):
    """Randomised verification of the admissible-mean axioms.

    Checks normalisation, 1-homogeneity, midpoint concavity, the lower bound
    ``theta >= min``, the four-point inequality
    ``theta(a, b) <= a d1theta(c, d) + b d2theta(c, d)`` with numeric partials,
    and monotonicity.  Returns a report instead of raising.
    """
    if sample_count < 100:
        raise InvalidArgument("sample_count must be at least 100")
    spec = _theta(spec)
    rng = np.random.default_rng(seed)

    def draw():
        return 10.0 ** rng.uniform(-3, 3, sample_count)

    def th(a, b):
        return np.asarray(eval_mean(spec, a, b), dtype=float)

    a, b, a2, b2 = draw(), draw(), draw(), draw()
    t = th(a, b)
    v = {}
    v["normalisation"] = abs(float(th(1.0, 1.0)) - 1.0)
    c = draw()
    v["homogeneity"] = float(np.max(np.abs(th(c * a, c * b) - c * t) / (c * np.maximum(t, 1e-300))))
    mid = th((a + a2) / 2, (b + b2) / 2)
    avg = (t + th(a2, b2)) / 2
    v["concavity"] = float(np.max((avg - mid) / np.maximum(avg, 1e-300)))
    v["lower_bound"] = float(np.max((np.minimum(a, b) - t) / np.minimum(a, b)))
    # four-point inequality; by homogeneity the partials only depend on c/d
    ratio = 10.0 ** rng.uniform(-2, 2, sample_count)
    c, d = np.minimum(ratio, 1.0), np.minimum(1.0 / ratio, 1.0)
    d1 = _fd5(lambda h: th(c + h, d), 1e-3 * c)
    d2 = _fd5(lambda h: th(c, d + h), 1e-3 * d)
    rhs = a * d1 + b * d2
    v["four_point"] = float(np.max((t - rhs) / (a + b)))
    v["monotonicity"] = float(max(0.0, -d1.min(), -d2.min()))
    return MeanCheckReport({k: max(0.0, x) for k, x in v.items()}, tol)


@dataclass(frozen=True)
class WeightFunction:
    """Per-edge weights ``lam[e] = lambda_{KL}`` for ``edges[e] = (K, L)``, K < L.

    ``lambda_{LK} = 1 - lambda_{KL}`` holds by construction.
    """

    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        if lam.ndim != 1 or np.any(lam < 0) or np.any(lam > 1) or np.any(np.isnan(lam)):
            raise InvalidArgument("weights must lie in [0, 1]")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def constant(cls, mesh, value=0.5):
        return cls(np.full(mesh.n_edges, float(value)))

    def ordered(self, mesh, k, l):
        """``lambda_{kl}`` for an arbitrary orientation."""
        e = _edge_index(mesh, k, l)
        return self.lam[e] if mesh.edges[e, 0] == k else 1.0 - self.lam[e]

    def to_json(self, mesh):
        return [{"edge": [int(i), int(j)], "lambda": float(x)} for (i, j), x in zip(mesh.edges, self.lam)]

    @classmethod
    def from_json(cls, mesh, items):
        lam = np.full(mesh.n_edges, np.nan)
        for pos, item in enumerate(items):
            try:
                i, j = item["edge"]
                x = float(item["lambda"])
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidArgument(f"weights[{pos}]: expected {{edge: [i, j], lambda: x}}") from exc
            e = _edge_index(mesh, i, j)
            lam[e] = x if mesh.edges[e, 0] == i else 1.0 - x
        if np.any(np.isnan(lam)):
            missing = mesh.edges[np.isnan(lam)][0].tolist()
            raise InvalidArgument(f"no weight given for edge {missing}")
        return cls(lam)


def _edge_index(mesh, k, l):
    i, j = min(k, l), max(k, l)
    hit = np.flatnonzero((mesh.edges[:, 0] == i) & (mesh.edges[:, 1] == j))
    if not len(hit):
        raise InvalidArgument(f"cells {k} and {l} are not neighbours")
    return int(hit[0])


class MeanFamily:
    """One oriented mean ``theta_KL`` per mesh edge ``(K, L)`` with ``K < L``.

    ``theta_LK(b, a) = theta_KL(a, b)`` holds by storing a single oriented mean.
    """

    def __init__(self, specs):
        self.specs = tuple(specs)
        groups = {}
        for e, s in enumerate(self.specs):
            groups.setdefault(s, []).append(e)
        self._groups = [(s, np.array(idx)) for s, idx in groups.items()]

    def __len__(self):
        return len(self.specs)

    @classmethod
    def uniform(cls, mesh, spec):
        if isinstance(spec, str):
            spec = MeanSpec.parse(spec)
        return cls([spec] * mesh.n_edges)

    @classmethod
    def from_weights(cls, kind, weights):
        """Weighted means of one kind compatible with ``weights``."""
        kind = _ALIASES.get(kind, kind)
        if kind == "logarithmic":
            if np.any(np.abs(weights.lam - 0.5) > 0):
                raise InvalidArgument("logarithmic mean only supports weight 1/2")
        return cls([MeanSpec(kind, float(x)) for x in weights.lam])

    def evaluate(self, a, b):
        """``theta_e(a[..., e], b[..., e])``; edges run along the last axis."""
        a, b = np.asarray(a, float), np.asarray(b, float)
        out = np.empty(np.broadcast(a, b).shape)
        for s, idx in self._groups:
            out[..., idx] = eval_mean(s, a[..., idx], b[..., idx])
        return out

    def partials(self, a, b):
        """Value and partials ``(6, ..., E)`` at positive arguments."""
        a, b = np.asarray(a, float), np.asarray(b, float)
        out = np.empty((6,) + a.shape)
        for s, idx in self._groups:
            out[..., idx] = np.array(mean_partials(s, a[..., idx], b[..., idx]))
        return out

    def weights(self):
        return WeightFunction([weight_of(s) for s in self.specs])


@dataclass
class CompatibilityReport:
    weight_errors: np.ndarray
    inequality_violation: float
    tol: float = 1e-8

    @property
    def compatible(self) -> bool:
        return bool(np.all(self.weight_errors <= self.tol)) and self.inequality_violation <= self.tol


def compatibility_check(family, weights, sample_count=200, seed=0):
    """Check ``weight_of(theta_KL) == lambda_KL`` and the bound
    ``theta_KL(a, b) <= lambda_KL a + lambda_LK b`` on sampled arguments."""
    if len(family) != len(weights.lam):
        raise InvalidArgument(
            f"mean family has {len(family)} edges, weight function has {len(weights.lam)}"
        )
    rng = np.random.default_rng(seed)
    induced = np.array([weight_of(s) for s in family.specs])
    err = np.abs(induced - weights.lam)
    worst = 0.0
    for s, idx in family._groups:
        a = 10.0 ** rng.uniform(-3, 3, sample_count)
        b = 10.0 ** rng.uniform(-3, 3, sample_count)
        t = np.asarray(eval_mean(s, a, b))
        for lam in np.unique(weights.lam[idx]):
            bound = lam * a + (1 - lam) * b
            worst = max(worst, float(np.max((t - bound) / bound)))
    return CompatibilityReport(err, max(worst, 0.0))
