"""Action functional, kinetic functional, divergence and the dual action.

Edge fields store one value per mesh edge ``(K, L)`` with ``K < L``, meaning
``V(K, L)``; ``V(L, K) = -V(K, L)`` is implied.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg, splu

from fvot.errors import InvalidArgument, SolverFailure
from fvot.means import MeanFamily, MeanSpec
from fvot.mesh.measures import as_masses

CG_THRESHOLD = 100_000
BALANCE_TOL = 1e-10
RESIDUAL_TOL = 1e-9


def as_family(mesh, family):
    """Accept a MeanFamily, a MeanSpec or a descriptor such as ``"log"``.

    ``"<kind>:com"`` builds the family compatible with the centre-of-mass
    weights of ``mesh``.
    """
    if isinstance(family, str) and family.strip().endswith(":com"):
        from fvot.isotropy import center_of_mass_weights

        kind = family.strip()[: -len(":com")]
        return MeanFamily.from_weights(kind, center_of_mass_weights(mesh).weights)
    if isinstance(family, MeanFamily):
        if len(family) != mesh.n_edges:
            raise InvalidArgument(f"mean family has {len(family)} edges, mesh has {mesh.n_edges}")
        return family
    if isinstance(family, (MeanSpec, str)):
        return MeanFamily.uniform(mesh, family)
    raise InvalidArgument(f"cannot interpret {family!r} as a mean family")


def edge_means(mesh, family, m):
    """``theta_KL(rho(K), rho(L))`` for every edge."""
    rho = as_masses(m, mesh) / mesh.volumes
    k, l = mesh.edges[:, 0], mesh.edges[:, 1]
    return as_family(mesh, family).evaluate(rho[k], rho[l])


def action(mesh, family, m, psi):
    """``A_T(m, psi) = sum_edges S_KL theta_KL (psi(K) - psi(L))^2``."""
    psi = _cell_vector(mesh, psi)
    grad = psi[mesh.edges[:, 0]] - psi[mesh.edges[:, 1]]
    return float(np.sum(mesh.transmissions * edge_means(mesh, family, m) * grad**2))


def kinetic(mesh, family, m, V):
    """``sum_edges S_KL V^2 / theta_KL``; +inf for flow across a dead edge."""
    V = _edge_vector(mesh, V)
    theta = edge_means(mesh, family, m)
    if np.any((theta <= 0) & (V != 0)):
        return float("inf")
    live = theta > 0
    return float(np.sum(mesh.transmissions[live] * V[live] ** 2 / theta[live]))


def divergence(mesh, V):
    """``div V (K) = sum_L S_KL V(K, L)``."""
    return mesh.incidence @ (mesh.transmissions * _edge_vector(mesh, V))


def dual_action_elliptic(mesh, family, m, sigma):
    """Dual action through the weighted graph-Laplacian problem.

    Solves ``sum_L S_KL theta_KL (psi(K) - psi(L)) = sigma(K)`` on the subgraph
    of live edges (``theta > 0``), fixing the gauge by a zero ``|K|``-weighted
    mean on every connected component.

    Returns
    -------
    value : float
        ``sum_K psi(K) sigma(K)``, or ``inf`` if ``sigma`` is unbalanced on
        some live component.
    psi : ndarray or None
        The optimal potential (``None`` when the value is infinite).
    """
    sigma = _balanced(mesh, sigma)
    if not np.any(sigma):
        return 0.0, np.zeros(mesh.n_cells)
    theta = edge_means(mesh, family, m)
    live = theta > 0
    labels = _check_components(mesh, live, sigma)
    if labels is None:
        return float("inf"), None
    D = mesh.incidence[:, live]
    L = (D @ sparse.diags(mesh.transmissions[live] * theta[live]) @ D.T).tocsc()
    psi = _solve_grounded(L, sigma, labels)
    vol = mesh.volumes
    for c in np.unique(labels):
        idx = labels == c
        psi[idx] -= np.dot(vol[idx], psi[idx]) / vol[idx].sum()
    res = np.linalg.norm(L @ psi - sigma)
    if not np.isfinite(res) or res > RESIDUAL_TOL * max(1.0, np.linalg.norm(sigma)):
        raise SolverFailure("elliptic solve did not converge", residual=float(res))
    return float(np.dot(psi, sigma)), psi


def dual_action_flow(mesh, family, m, sigma):
    """Dual action as the least kinetic energy among flows with ``div V = -sigma``.

    The quadratic program is solved through its saddle-point system in the
    edge fluxes ``W = S V`` of the live edges; dead edges carry no flow.
    Returns ``(value, V)`` with ``V = None`` when no feasible flow exists.
    """
    sigma = _balanced(mesh, sigma)
    if not np.any(sigma):
        return 0.0, np.zeros(mesh.n_edges)
    theta = edge_means(mesh, family, m)
    live = np.flatnonzero(theta > 0)
    labels = _check_components(mesh, theta > 0, sigma)
    if labels is None:
        return float("inf"), None
    S = mesh.transmissions[live]
    D = mesh.incidence[:, live]
    # one continuity row per component is redundant
    _, first = np.unique(labels, return_index=True)
    keep = np.setdiff1d(np.arange(mesh.n_cells), first)
    Dk = D[keep]
    n_e = len(live)
    K = sparse.bmat(
        [[sparse.diags(2.0 / (S * theta[live])), Dk.T], [Dk, None]], format="csc"
    )
    rhs = np.concatenate([np.zeros(n_e), -sigma[keep]])
    try:
        sol = splu(K).solve(rhs)
    except RuntimeError as exc:
        raise SolverFailure(f"saddle-point system is singular: {exc}") from exc
    W = sol[:n_e]
    res = np.linalg.norm(D @ W + sigma)
    if not np.isfinite(res) or res > RESIDUAL_TOL * max(1.0, np.linalg.norm(sigma)):
        raise SolverFailure("flow constraint not satisfied", residual=float(res))
    V = np.zeros(mesh.n_edges)
    V[live] = W / S
    return float(np.sum(W**2 / (S * theta[live]))), V


def discrete_poincare_ratio(mesh, family, m, psi):
    """``delta * sum_K |K| psi(K)^2 / A_T(m, psi)`` with ``delta = min rho``."""
    psi = _cell_vector(mesh, psi)
    num = float(np.dot(mesh.volumes, psi**2))
    if num == 0.0:
        return 0.0
    a = action(mesh, family, m, psi)
    if a == 0.0:
        return float("inf")
    delta = float(np.min(as_masses(m, mesh) / mesh.volumes))
    return delta * num / a


def _cell_vector(mesh, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (mesh.n_cells,):
        raise InvalidArgument(f"expected {mesh.n_cells} cell values, got shape {x.shape}")
    return x


def _edge_vector(mesh, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (mesh.n_edges,):
        raise InvalidArgument(f"expected {mesh.n_edges} edge values, got shape {x.shape}")
    return x


def _balanced(mesh, sigma):
    sigma = _cell_vector(mesh, sigma)
    if not np.all(np.isfinite(sigma)):
        raise InvalidArgument("sigma must be finite")
    if abs(sigma.sum()) > BALANCE_TOL * max(1.0, np.abs(sigma).sum()):
        raise InvalidArgument(f"sigma must have zero total mass, got {sigma.sum()!r}")
    return sigma


def _check_components(mesh, live, sigma):
    """Component labels of the live subgraph, or None if sigma is unbalanced."""
    n, labels = mesh.components(live)
    totals = np.bincount(labels, weights=sigma, minlength=n)
    scale = np.bincount(labels, weights=np.abs(sigma), minlength=n)
    if np.any(np.abs(totals) > BALANCE_TOL * np.maximum(scale.max(), 1e-300)):
        return None
    return labels


def _solve_grounded(L, sigma, labels):
    """Solve the singular Laplacian system with one grounded cell per component."""
    n = L.shape[0]
    _, first = np.unique(labels, return_index=True)
    free = np.setdiff1d(np.arange(n), first)
    psi = np.zeros(n)
    if not len(free):
        return psi
    A = L[free][:, free]
    b = sigma[free]
    if n < CG_THRESHOLD:
        try:
            psi[free] = splu(A.tocsc()).solve(b)
        except RuntimeError as exc:
            raise SolverFailure(f"Laplacian factorisation failed: {exc}") from exc
    else:
        diag = A.diagonal()
        M = sparse.diags(1.0 / diag)
        x, info = cg(A, b, rtol=1e-12, M=M, maxiter=20 * n)
        if info != 0:
            raise SolverFailure("conjugate gradient did not converge",
                                residual=float(np.linalg.norm(A @ x - b)))
        psi[free] = x
    return psi
