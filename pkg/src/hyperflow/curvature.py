"""Global curvature of a sphere packing metric on an ideal triangulation.

A packing metric is a positive vector ``r`` indexed by vertex class.  All
functions accept ``r`` of shape ``(..., N)`` and broadcast over leading axes,
which the energy quadrature uses to evaluate every node in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .tetkernel import tet_dihedral_angles, tet_evaluate
from .triangulation import Triangulation

TWO_PI = 2.0 * np.pi
GAUSS_ORDER = 16


@dataclass(frozen=True)
class _Incidence:
    corners: np.ndarray  # (n_tets, 4)
    slot_edge: np.ndarray  # (n_tets * 6, n_edges) 0/1
    edge_vertex: np.ndarray  # (n_edges, N) number of ends of edge e at i
    corner_vertex: np.ndarray  # (n_tets * 4, N) 0/1
    corner_onehot: np.ndarray  # (n_tets, 4, N)
    chi: np.ndarray


def _incidence(T: Triangulation) -> _Incidence:
    cached = T.__dict__.get("_incidence")
    if cached is not None:
        return cached
    N, nt, ne = T.n_vertices, T.n_tets, T.n_edges
    corners = T.corners
    slot_edge = np.zeros((nt * 6, ne))
    slot_edge[np.arange(nt * 6), T.slot_class.ravel()] = 1.0
    edge_vertex = np.zeros((ne, N))
    ends = T.edge_endpoints()
    np.add.at(edge_vertex, (np.arange(ne), ends[:, 0]), 1.0)
    np.add.at(edge_vertex, (np.arange(ne), ends[:, 1]), 1.0)
    corner_vertex = np.zeros((nt * 4, N))
    corner_vertex[np.arange(nt * 4), corners.ravel()] = 1.0
    inc = _Incidence(
        corners=corners,
        slot_edge=slot_edge,
        edge_vertex=edge_vertex,
        corner_vertex=corner_vertex,
        corner_onehot=corner_vertex.reshape(nt, 4, N),
        chi=np.array(T.euler_chars, dtype=float),
    )
    object.__setattr__(T, "_incidence", inc)
    return inc


def as_metric(T: Triangulation, r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.ndim == 0 or r.shape[-1] != T.n_vertices:
        raise ValueError(
            f"dimension mismatch: metric has shape {r.shape}, triangulation has "
            f"{T.n_vertices} vertex classes"
        )
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise ValueError("packing radii must be finite and strictly positive")
    return r


def _tet_radii(T, r):
    return r[..., _incidence(T).corners]


def edge_ricci(T: Triangulation, r) -> np.ndarray:
    """Ricci curvature ``2 pi - (total dihedral angle)`` of every edge class."""
    r = as_metric(T, r)
    beta = tet_dihedral_angles(_tet_radii(T, r))
    flat = beta.reshape(beta.shape[:-2] + (-1,))
    return TWO_PI - flat @ _incidence(T).slot_edge


def scalar_curvature(T: Triangulation, r) -> np.ndarray:
    """Scalar curvature as the sum of edge curvatures at each vertex class.

    An edge class with both ends at ``i`` contributes twice.
    """
    return edge_ricci(T, r) @ _incidence(T).edge_vertex


def link_areas(T: Triangulation, r) -> np.ndarray:
    r = as_metric(T, r)
    _, area = tet_evaluate(_tet_radii(T, r))
    return area.reshape(area.shape[:-2] + (-1,)) @ _incidence(T).corner_vertex


def scalar_curvature_gb(T: Triangulation, r) -> np.ndarray:
    """Scalar curvature as ``2 pi chi(link) + area(link)``."""
    return TWO_PI * _incidence(T).chi + link_areas(T, r)


def _assemble_dense(T, jac):
    C = _incidence(T).corner_onehot
    lam = np.einsum("tan,...tab,tbm->...nm", C, jac, C)
    return 0.5 * (lam + np.swapaxes(lam, -1, -2))


def curvature_jacobian(T: Triangulation, r, sparse: bool = False):
    """``dK_i / dr_j`` assembled from per-tetrahedron area Jacobians.

    Returned exactly symmetric.  With ``sparse=True`` a CSR matrix holding only
    pairs of vertex classes that share a tetrahedron is returned instead.
    """
    r = as_metric(T, r)
    _, _, jac = tet_evaluate(_tet_radii(T, r), jacobian=True)
    if not sparse:
        return _assemble_dense(T, jac)
    if r.ndim != 1:
        raise ValueError("sparse assembly takes a single metric")
    corners = _incidence(T).corners
    rows = np.repeat(corners, 4, axis=1).ravel()
    cols = np.tile(corners, (1, 4)).ravel()
    N = T.n_vertices
    lam = sp.coo_matrix((jac.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    lam.sum_duplicates()
    return ((lam + lam.T) * 0.5).tocsr()


@dataclass(frozen=True)
class CurvatureState:
    r: np.ndarray
    K: np.ndarray
    K_gauss_bonnet: np.ndarray
    edge_K: np.ndarray
    lambda_matrix: np.ndarray | None
    area_link: np.ndarray

    def form_discrepancy(self) -> float:
        return float(np.max(np.abs(self.K - self.K_gauss_bonnet)))


def curvature_state(T: Triangulation, r, jacobian: bool = True) -> CurvatureState:
    """Every curvature quantity at ``r`` from a single kernel pass."""
    r = as_metric(T, r)
    inc = _incidence(T)
    out = tet_evaluate(_tet_radii(T, r), jacobian=jacobian)
    beta, area = out[0], out[1]
    edge_K = TWO_PI - beta.reshape(beta.shape[:-2] + (-1,)) @ inc.slot_edge
    area_link = area.reshape(area.shape[:-2] + (-1,)) @ inc.corner_vertex
    return CurvatureState(
        r=r,
        K=edge_K @ inc.edge_vertex,
        K_gauss_bonnet=TWO_PI * inc.chi + area_link,
        edge_K=edge_K,
        lambda_matrix=_assemble_dense(T, out[2]) if jacobian else None,
        area_link=area_link,
    )


def max_eigenvalue(T: Triangulation, r) -> float:
    """Largest eigenvalue of the curvature Jacobian; negative by theory."""
    return float(np.linalg.eigvalsh(curvature_jacobian(T, r))[-1])


def _gauss_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def segment_energy(T: Triangulation, a, b, K_target, order: int = GAUSS_ORDER) -> float:
    """``-int (K - K_target) . dr`` along the straight segment from ``a`` to ``b``."""
    a = as_metric(T, a)
    b = as_metric(T, b)
    s, w = _gauss_nodes(order)
    d = b - a
    pts = a + s[:, None] * d
    K = scalar_curvature(T, pts)
    return float(-(w @ ((K - np.asarray(K_target, dtype=float)) @ d)))


def curvature_energy(T: Triangulation, r, r_base, K_target, order: int = GAUSS_ORDER) -> float:
    """Convex curvature energy at ``r`` measured from ``r_base``.

    Its gradient in ``r`` is ``-(K(r) - K_target)`` and its Hessian is the
    negated curvature Jacobian, so it is strictly convex on the positive
    orthant and vanishes at ``r_base``.
    """
    return segment_energy(T, r_base, r, K_target, order)


def path_energy(T: Triangulation, points, K_target, order: int = GAUSS_ORDER) -> float:
    """Energy accumulated along a piecewise-linear path through ``points``."""
    pts = [as_metric(T, p) for p in points]
    return sum(segment_energy(T, a, b, K_target, order) for a, b in zip(pts, pts[1:]))
