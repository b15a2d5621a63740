"""The discrete transport distance W_T, curve actions and the 1D counterexample.

``wt_distance`` minimises the time-discrete Benamou-Brenier energy

    sum_j dt * sum_e W_je^2 / (S_e theta_e(a_je, b_je)),
    m_{j+1} - m_j + dt * div(W_j) = 0,

over interior masses ``m_1 .. m_{M-1}`` and edge fluxes ``W_j = S V_j``, where
``a_je, b_je`` are the midpoint densities of the two cells of edge ``e``.  The
problem is jointly convex; it is solved by a feasible primal Newton method
with a logarithmic barrier on the masses that is driven to zero.

The flux block of the Hessian is diagonal, so each Newton system is condensed
onto masses and multipliers.  The result is symmetric quasi-definite and lives
on the space-time graph; it is factorised without pivoting in a nested
dissection order built from cell anchors and time levels.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate as sp_integrate
from scipy import sparse
from scipy.sparse.linalg import splu

from fvot import _json
from fvot.action import as_family, dual_action_elliptic, edge_means
from fvot.errors import InvalidArgument, SolverFailure
from fvot.means import MeanSpec
from fvot.mesh.measures import DiscreteMeasure, as_masses, project

_PAT = np.array([0, 1, 1, 2, 2])
ND_LEAF = 64
STEP_RESIDUAL = 1e-10
log = logging.getLogger(__name__)


def _dissection_order(G, coords, leaf=ND_LEAF):
    """Nested dissection ordering of the graph of ``G``.

    Each subset is split at the median of its widest coordinate; the nodes on
    the smaller side of the cut that touch the other side form the separator,
    which is ordered after both halves.
    """
    G = abs(sparse.csr_matrix(G))
    G = (G + G.T).tocsr()
    out = []

    def split(idx):
        if len(idx) <= leaf:
            out.append(idx)
            return
        c = coords[idx]
        ax = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        left = c[:, ax] <= np.median(c[:, ax])
        if left.all() or not left.any():
            out.append(idx)
            return
        cross = G[idx[left]][:, idx[~left]]
        touch_l = cross.getnnz(axis=1) > 0
        touch_r = cross.getnnz(axis=0) > 0
        lo, hi = idx[left], idx[~left]
        if touch_l.sum() <= touch_r.sum():
            sep, lo = lo[touch_l], lo[~touch_l]
        else:
            sep, hi = hi[touch_r], hi[~touch_r]
        split(lo)
        split(hi)
        out.append(sep)

    split(np.arange(G.shape[0]))
    return np.concatenate(out)


@dataclass
class DiscreteCurve:
    """Masses ``m_i`` at ``times[i]`` and optional velocities per interval."""

    times: np.ndarray
    masses: np.ndarray
    flows: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 2 or np.any(np.diff(self.times) <= 0):
            raise InvalidArgument("curve times must be strictly increasing")
        if self.masses.shape[0] != len(self.times):
            raise InvalidArgument("one mass vector per time node is required")
        if self.flows is not None:
            self.flows = np.asarray(self.flows, dtype=float)
            if self.flows.shape[0] != len(self.times) - 1:
                raise InvalidArgument("one flow per time interval is required")

    @classmethod
    def uniform(cls, masses, flows=None):
        masses = np.asarray(masses, dtype=float)
        return cls(np.linspace(0.0, 1.0, len(masses)), masses, flows)

    @property
    def M(self):
        return len(self.times) - 1

    def continuity_residual(self, mesh):
        """Max over intervals of ``|(m_{i+1} - m_i)/dt + div V|``."""
        if self.flows is None:
            raise InvalidArgument("curve carries no flows")
        dt = np.diff(self.times)[:, None]
        div = (mesh.incidence @ (mesh.transmissions[:, None] * self.flows.T)).T
        return float(np.max(np.abs(np.diff(self.masses, axis=0) / dt + div)))

    def to_dict(self):
        out = {"times": self.times.tolist(), "masses": self.masses.tolist()}
        if self.flows is not None:
            out["flows"] = self.flows.tolist()
        return out


@dataclass
class TransportResult:
    value: float
    curve: Optional[DiscreteCurve]
    iterations: int = 0
    objective_history: list = field(default_factory=list)
    refinement_gap: float = math.nan
    converged: bool = True

    def to_dict(self):
        """Plain-data form; an infinite value is written as the string ``"+inf"``."""
        return {
            "value": "+inf" if self.value == math.inf else self.value,
            "iterations": self.iterations,
            "converged": self.converged,
            "refinement_gap": self.refinement_gap,
            "objective_history": list(self.objective_history),
            "curve": None if self.curve is None else self.curve.to_dict(),
        }

    def to_json(self, indent=1):
        return _json.dumps(self.to_dict(), indent=indent)


class _Problem:
    """Index bookkeeping, objective and Newton system for one (mesh, M)."""

    def __init__(self, mesh, family, m0, m1, times):
        self.mesh, self.family = mesh, family
        self.times = np.asarray(times, dtype=float)
        self.M = M = len(self.times) - 1
        self.m0, self.m1 = m0, m1
        n, E = mesh.n_cells, mesh.n_edges
        self.n, self.E, self.dt = n, E, np.diff(self.times)
        self.nm = n * (M - 1)
        self.size = self.nm + E * M
        k, l = mesh.edges[:, 0], mesh.edges[:, 1]
        self.S = mesh.transmissions
        self.ca = 1.0 / (2 * mesh.volumes[k])
        self.cb = 1.0 / (2 * mesh.volumes[l])
        j = np.arange(M)[:, None]

        def mid(cells, shift):
            t = j + shift  # node index
            idx = (t - 1) * n + cells[None, :]
            return np.where((t >= 1) & (t <= M - 1), idx, -1)

        w_idx = self.nm + j * E + np.arange(E)[None, :]
        self.loc = np.stack([w_idx, mid(k, 0), mid(k, 1), mid(l, 0), mid(l, 1)], axis=-1)
        self.A, self.c = self._constraints()
        self._perm = None

    def _constraints(self):
        n, M, dt = self.n, self.M, self.dt
        shift = sparse.lil_matrix((M, M - 1))
        for j in range(M):
            if j <= M - 2:
                shift[j, j] = 1.0
            if j >= 1:
                shift[j, j - 1] = -1.0
        Am = sparse.kron(shift.tocsr(), sparse.identity(n))
        Aw = sparse.kron(sparse.diags(dt), self.mesh.incidence)
        A = sparse.hstack([Am, Aw]).tocsr()
        c = np.zeros(n * M)
        c[:n] += self.m0
        c[-n:] -= self.m1
        _, labels = self.mesh.components()
        _, first = np.unique(labels, return_index=True)
        keep = np.setdiff1d(np.arange(n * M), first)
        self.rows = keep
        return A[keep], c[keep]

    def _coords(self):
        """Space-time positions of masses (at nodes) and multipliers (mid-interval)."""
        n, M = self.n, self.M
        x = self.mesh.anchors / max(self.mesh.mesh_size, 1e-300)
        node = np.column_stack([np.repeat(np.arange(1.0, M), n), np.tile(x, (M - 1, 1))])
        row = np.column_stack([self.rows // n + 0.5, x[self.rows % n]])
        return np.vstack([node, row])

    def newton_step(self, H, g, m, tau, r):
        """Newton step for Hessian ``H`` plus the barrier ``tau / m^2``, barrier
        gradient ``g`` and constraint residual ``r``."""
        nm = self.nm
        H = H.tocsr()
        m_diag = tau / m**2
        Hmw = H[:nm, nm:]
        hw = H[nm:, nm:].diagonal()
        Hi = sparse.diags(1.0 / hw)
        Am, Aw = self.A[:, :nm], self.A[:, nm:]
        gm, gw = g[:nm], g[nm:]
        P = H[:nm, :nm] + sparse.diags(m_diag) - Hmw @ Hi @ Hmw.T
        Q = Am - Aw @ Hi @ Hmw.T
        R = Aw @ Hi @ Aw.T
        K = sparse.bmat([[P, Q.T], [Q, -R]], format="csr")
        rhs = np.concatenate([-gm + Hmw @ (gw / hw), r + Aw @ (gw / hw)])
        sol = self._solve(K, rhs)
        dm, y = sol[:nm], sol[nm:]
        dw = -(gw + Hmw.T @ dm + Aw.T @ y) / hw
        return np.concatenate([dm, dw])

    def _solve(self, K, rhs):
        if self._perm is None:
            self._perm = _dissection_order(K, self._coords())
        p = self._perm
        Kp = K[p][:, p].tocsc()
        b = rhs[p]
        scale = max(np.linalg.norm(b), 1e-300)
        try:
            lu = splu(Kp, permc_spec="NATURAL", diag_pivot_thresh=0.0,
                      options={"SymmetricMode": True})
            z = lu.solve(b)
            for _ in range(3):
                res = b - Kp @ z
                if not np.all(np.isfinite(z)) or np.linalg.norm(res) <= STEP_RESIDUAL * scale:
                    break
                z += lu.solve(res)
        except RuntimeError:
            z = None
        if z is None or not np.all(np.isfinite(z)) or np.linalg.norm(b - Kp @ z) > STEP_RESIDUAL * scale:
            log.debug("unpivoted factorisation inaccurate, falling back to partial pivoting")
            try:
                z = splu(Kp, permc_spec="COLAMD").solve(b)
            except RuntimeError as exc:
                raise SolverFailure(f"Newton system is singular: {exc}") from exc
        out = np.empty_like(z)
        out[p] = z
        return out

    def unpack(self, x):
        inner = x[: self.nm].reshape(self.M - 1, self.n)
        masses = np.vstack([self.m0, inner, self.m1])
        return masses, x[self.nm:].reshape(self.M, self.E)

    def pack(self, masses, W):
        return np.concatenate([masses[1:-1].ravel(), W.ravel()])

    def _densities(self, masses):
        k, l = self.mesh.edges[:, 0], self.mesh.edges[:, 1]
        a = (masses[:-1, k] + masses[1:, k]) * self.ca
        b = (masses[:-1, l] + masses[1:, l]) * self.cb
        return a, b

    def objective(self, x):
        masses, W = self.unpack(x)
        a, b = self._densities(masses)
        theta = self.family.evaluate(a, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(W == 0, 0.0, W**2 / (self.S * theta))
        return float(np.sum(self.dt[:, None] * terms))

    def derivatives(self, x):
        """Objective, gradient and sparse Hessian."""
        masses, W = self.unpack(x)
        a, b = self._densities(masses)
        th, ta, tb, taa, tab, tbb = self.family.partials(a, b)
        w = W
        scale = self.dt[:, None] / self.S
        f = float(np.sum(scale * w**2 / th))
        t2, t3 = th**2, th**3
        hw, ha, hb = 2 * w / th, -(w**2) * ta / t2, -(w**2) * tb / t2
        B = np.empty(w.shape + (3, 3))
        B[..., 0, 0] = 2 / th
        B[..., 0, 1] = B[..., 1, 0] = -2 * w * ta / t2
        B[..., 0, 2] = B[..., 2, 0] = -2 * w * tb / t2
        B[..., 1, 1] = w**2 * (2 * ta**2 / t3 - taa / t2)
        B[..., 1, 2] = B[..., 2, 1] = w**2 * (2 * ta * tb / t3 - tab / t2)
        B[..., 2, 2] = w**2 * (2 * tb**2 / t3 - tbb / t2)
        coef = np.stack(np.broadcast_arrays(1.0, self.ca, self.ca, self.cb, self.cb), axis=-1)
        g3 = np.stack([hw, ha, hb], axis=-1)
        g5 = g3[..., _PAT] * coef * scale[..., None]
        H5 = B[..., _PAT[:, None], _PAT[None, :]] * (coef[..., :, None] * coef[..., None, :])
        H5 *= scale[..., None, None]
        loc = self.loc
        valid = loc >= 0
        grad = np.bincount(loc[valid], g5[valid], minlength=self.size)
        pair = valid[..., :, None] & valid[..., None, :]
        rows = np.broadcast_to(loc[..., :, None], H5.shape)[pair]
        cols = np.broadcast_to(loc[..., None, :], H5.shape)[pair]
        H = sparse.coo_matrix((H5[pair], (rows, cols)), shape=(self.size, self.size)).tocsc()
        return f, grad, H

    def initial_point(self):
        """Linear interpolation of masses with flows from one elliptic solve per interval."""
        t = self.times[:, None]
        masses = (1 - t) * self.m0 + t * self.m1
        inner = masses[1:-1]
        if inner.size and inner.min() <= 0:
            u = self.mesh.volumes / self.mesh.volumes.sum()
            blend = 1e-2 * 4 * t[1:-1] * (1 - t[1:-1])
            masses[1:-1] = (1 - blend) * inner + blend * u
        W = np.zeros((self.M, self.E))
        k, l = self.mesh.edges[:, 0], self.mesh.edges[:, 1]
        for j in range(self.M):
            sigma = (masses[j + 1] - masses[j]) / self.dt[j]
            mid = 0.5 * (masses[j] + masses[j + 1])
            if not np.any(sigma):
                continue
            sigma -= sigma.sum() / self.n
            _, psi = dual_action_elliptic(self.mesh, self.family, mid, sigma)
            theta = edge_means(self.mesh, self.family, mid)
            W[j] = self.S * theta * (psi[l] - psi[k])
        return self.pack(masses, W)


def _newton(prob, x, tol, max_iter, history):
    """Barrier-Newton iterations from a feasible ``x``; returns (x, iters, converged)."""
    nm = prob.nm
    A, c = prob.A, prob.c
    f0 = prob.objective(x)
    tau = 1e-3 * max(f0, 1e-12) / max(nm, 1)
    tau_min = 1e-3 * tol * (1 + f0) / max(nm, 1)
    iters = 0
    while True:
        for _ in range(50):
            if iters >= max_iter:
                return x, iters, False
            iters += 1
            f, g, H = prob.derivatives(x)
            m = x[:nm]
            g = g.copy()
            g[:nm] -= tau / m
            dx = prob.newton_step(H, g, m, tau, c - A @ x)
            if not np.all(np.isfinite(dx)):
                raise SolverFailure("Newton step is not finite")
            dec = float(-g @ dx)
            # fraction to the boundary
            dm = dx[:nm]
            neg = dm < 0
            alpha = min(1.0, 0.995 * float(np.min(-m[neg] / dm[neg]))) if neg.any() else 1.0

            def merit(y):
                return prob.objective(y) - tau * np.sum(np.log(y[:nm]))

            phi = f - tau * np.sum(np.log(m))
            while alpha > 1e-12:
                y = x + alpha * dx
                if np.all(y[:nm] > 0) and merit(y) <= phi - 1e-4 * alpha * max(dec, 0.0):
                    break
                alpha *= 0.5
            else:
                break
            x = y
            history.append(prob.objective(x))
            log.debug("iter %d tau %.3g step %.3g decrement %.3g objective %.17g", iters, tau, alpha, dec, history[-1])
            inner_tol = max(1e-3 * tol * (1 + f), 1e-2 * tau * nm)
            if dec / 2 <= inner_tol or alpha * max(dec, 0) <= 1e-16 * (1 + f):
                break
        if tau <= tau_min:
            return x, iters, True
        tau = max(tau * 0.1, tau_min)


def _refine(prob, x):
    """Bisected time grid with a feasible warm start: midpoint masses and
    repeated fluxes."""
    masses, W = prob.unpack(x)
    fine = np.empty((2 * prob.M + 1, prob.n))
    fine[::2] = masses
    fine[1::2] = 0.5 * (masses[:-1] + masses[1:])
    t = np.empty(2 * prob.M + 1)
    t[::2] = prob.times
    t[1::2] = 0.5 * (prob.times[:-1] + prob.times[1:])
    return t, fine, np.repeat(W, 2, axis=0)


def time_grid(M, kind="uniform"):
    """``uniform`` or ``graded`` time nodes; graded nodes ``s^2 / (s^2 + (1-s)^2)``
    are quadratically clustered at both ends."""
    s = np.arange(M + 1) / M
    if kind == "uniform":
        return s
    if kind == "graded":
        return s**2 / (s**2 + (1 - s) ** 2)
    raise InvalidArgument(f"unknown time grid {kind!r}")


def wt_distance(mesh, family, m0, m1, time_steps=32, tol=1e-10, max_iter=200, refine=True,
                grid="auto"):
    """Discrete transport distance with ``time_steps`` time intervals.

    Returns a :class:`TransportResult`; ``value`` is the square root of the
    minimised time-discrete energy.  ``grid`` selects the time nodes
    (see :func:`time_grid`); ``auto`` grades them towards the endpoints when an
    endpoint measure has empty cells, where the optimal curve is least smooth.
    With ``refine`` the problem is re-solved on the bisected grid (warm
    started) and ``refinement_gap`` reports the change in value.  If some
    connected component of the mesh holds different masses under ``m0`` and
    ``m1`` the value is ``inf``.
    """
    M = int(time_steps)
    if M < 2:
        raise InvalidArgument("time_steps must be at least 2")
    family = as_family(mesh, family)
    m0 = as_masses(DiscreteMeasure(as_masses(m0, mesh)), mesh)
    m1 = as_masses(DiscreteMeasure(as_masses(m1, mesh)), mesh)
    n_comp, labels = mesh.components()
    diff = np.bincount(labels, m1 - m0, n_comp)
    if np.any(np.abs(diff) > 1e-12):
        return TransportResult(math.inf, None, refinement_gap=0.0)
    if grid == "auto":
        grid = "graded" if min(m0.min(), m1.min()) <= 0 else "uniform"
    times = time_grid(M, grid)
    if np.array_equal(m0, m1):
        curve = DiscreteCurve(times, np.tile(m0, (M + 1, 1)), np.zeros((M, mesh.n_edges)))
        return TransportResult(0.0, curve, refinement_gap=0.0)
    prob = _Problem(mesh, family, m0, m1, times)
    history = []
    x, iters, ok = _newton(prob, prob.initial_point(), tol, max_iter, history)
    value = math.sqrt(max(prob.objective(x), 0.0))
    masses, W = prob.unpack(x)
    curve = DiscreteCurve(times, masses, W / mesh.transmissions)
    gap = math.nan
    if refine:
        t2, fine_m, fine_w = _refine(prob, x)
        fine = _Problem(mesh, family, m0, m1, t2)
        xf, it2, ok2 = _newton(fine, fine.pack(fine_m, fine_w), tol, max_iter, [])
        gap = abs(value - math.sqrt(max(fine.objective(xf), 0.0)))
        iters += it2
        ok = ok and ok2
    return TransportResult(value, curve, iters, history, gap, ok)


def wt_two_cell(mesh, spec):
    """Exact ``W_T(delta_K, delta_L)`` on a two-cell mesh.

    Moving mass ``g`` from K to L costs ``int_0^1 dg / sqrt(S theta((1-g)/|K|, g/|L|))``;
    the substitution ``g = sin^2 phi`` removes the endpoint singularities.
    """
    if mesh.n_cells != 2 or mesh.n_edges != 1:
        raise InvalidArgument("wt_two_cell needs a mesh with two cells and one interface")
    if isinstance(spec, str):
        spec = MeanSpec.parse(spec)
    S = float(mesh.transmissions[0])
    vk, vl = mesh.volumes

    def integrand(phi):
        g, h = math.sin(phi) ** 2, math.cos(phi) ** 2
        th = float(spec(h / vk, g / vl))
        if th <= 0:
            return math.inf
        return 2 * math.sin(phi) * math.cos(phi) / math.sqrt(th)

    val, _ = sp_integrate.quad(integrand, 0.0, math.pi / 2, epsabs=1e-12, epsrel=1e-12, limit=500)
    return val / math.sqrt(S) if math.isfinite(val) else math.inf


def curve_action(mesh, family, curve):
    """``sum_i dt_i A*_T(m_{i+1/2}, (m_{i+1} - m_i)/dt_i)`` along a discrete curve."""
    family = as_family(mesh, family)
    dt = np.diff(curve.times)
    total = 0.0
    for i in range(curve.M):
        sigma = (curve.masses[i + 1] - curve.masses[i]) / dt[i]
        sigma -= sigma.sum() / len(sigma)
        mid = 0.5 * (curve.masses[i] + curve.masses[i + 1])
        val, _ = dual_action_elliptic(mesh, family, mid, sigma)
        if not math.isfinite(val):
            return math.inf
        total += dt[i] * val
    return total


def _periodic_layout(mesh):
    """``(r, N)`` of a periodic 1D mesh with even cells small."""
    if mesh.dimension != 1 or mesh.n_cells % 2:
        raise InvalidArgument("expected a periodic 1D mesh")
    N = mesh.n_cells // 2
    vol = mesh.volumes
    r = vol[0] * N
    if not (np.allclose(vol[0::2], r / N, rtol=1e-9) and np.allclose(vol[1::2], (1 - r) / N, rtol=1e-9)):
        raise InvalidArgument("expected alternating small/large cells")
    return r, N


def oscillation_perturbation_1d(mesh, m, eta):
    """Add the small/large oscillation of amplitude ``eta`` to ``m``.

    Small (even) cells gain ``r(1-r) eta / N``, large (odd) cells lose the
    same amount, so the densities change by ``(1-r) eta`` and ``-r eta``.
    """
    r, N = _periodic_layout(mesh)
    m = as_masses(m, mesh)
    if eta < 0:
        raise InvalidArgument("eta must be nonnegative")
    rho = m / mesh.volumes
    if eta > 0 and eta >= rho.min() / max(r, 1 - r):
        raise InvalidArgument(f"eta={eta} too large for min density {rho.min():.6g}")
    delta = r * (1 - r) * eta / N
    out = m.copy()
    out[0::2] += delta
    out[1::2] -= delta
    return DiscreteMeasure(out)


def _linear_curve(a, b, M):
    t = np.linspace(0.0, 1.0, M + 1)[:, None]
    return DiscreteCurve(t.ravel(), (1 - t) * a + t * b)


def three_phase_curves(mesh, mu0, mu1, eta, M, side_steps=8):
    """Unit-time curves of the three phases: inject, transport, remove."""
    from fvot.continuum import w2_geodesic_1d

    m0 = project(mesh, mu0).mass
    m1 = project(mesh, mu1).mass
    nodes = [project(mesh, w2_geodesic_1d(mu0, mu1, t)).mass for t in np.linspace(0, 1, M + 1)]
    nodes[0], nodes[-1] = m0, m1
    pert = np.array([oscillation_perturbation_1d(mesh, m, eta).mass for m in nodes])
    return (_linear_curve(m0, pert[0], side_steps), DiscreteCurve.uniform(pert),
            _linear_curve(pert[-1], m1, side_steps))


def counterexample_gap(r, N, spec, mu0, mu1, eta, M=32, side_steps=8):
    """Upper bound on ``W_T`` from the three-phase oscillating curve versus ``W2``.

    With phase energies ``E_i`` (each phase run in unit time) the best time
    split gives the action ``(sum_i sqrt(E_i))^2``, so ``upper = sum sqrt(E_i)``.
    """
    from fvot.continuum import w2_1d
    from fvot.mesh.generators import build_periodic_1d

    mesh = build_periodic_1d(r, N)
    family = as_family(mesh, spec)
    energies = [curve_action(mesh, family, c) for c in three_phase_curves(mesh, mu0, mu1, eta, M, side_steps)]
    upper = sum(math.sqrt(e) for e in energies)
    w2 = w2_1d(mu0, mu1)
    return {"upper": upper, "w2": w2, "gap": w2 - upper, "energies": energies}


def save_result(result, path):
    with open(path, "w") as fh:
        fh.write(result.to_json())


def load_result(path):
    with open(path) as fh:
        d = json.load(fh)
    c = d.get("curve")
    curve = None if c is None else DiscreteCurve(c["times"], c["masses"], c.get("flows"))
    value = math.inf if d["value"] == "+inf" else float(d["value"])
    return TransportResult(value, curve, d["iterations"], d["objective_history"],
                           d["refinement_gap"], d["converged"])
