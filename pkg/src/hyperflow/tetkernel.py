"""Per-tetrahedron geometry of hyper-ideal tetrahedra with sphere packing radii.

Corners are ordered ``(i, j, k, h) = (0, 1, 2, 3)`` and edge slots follow
:data:`hyperflow.triangulation.EDGE_SLOTS`.  Every function accepts radii of
shape ``(..., 4)`` and broadcasts over the leading axes.

All formulas are evaluated in ``t = tanh r``.  The hyperbolic cosines that
appear in the closed forms cancel down to ``c_{ijk} = lam_{ijk} c_i c_j c_k``
and ``1 / c^2 = sech^2 r``, so nothing here overflows for large radii.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .triangulation import EDGE_SLOTS

LARGE_RADIUS = 20.0

_P = np.array([p for p, _ in EDGE_SLOTS])
_Q = np.array([q for _, q in EDGE_SLOTS])
_U = np.array([EDGE_SLOTS[5 - s][0] for s in range(6)])
_V = np.array([EDGE_SLOTS[5 - s][1] for s in range(6)])
# slots meeting each corner
CORNER_SLOTS = tuple(tuple(s for s, e in enumerate(EDGE_SLOTS) if c in e) for c in range(4))


class LargeRadiusWarning(RuntimeWarning):
    """Radii beyond ~20 saturate tanh; derivatives lose accuracy."""


class DegenerateTetrahedronError(ArithmeticError):
    pass


def _radii(r) -> np.ndarray:
    r = np.asarray(r)
    # keep extended precision when given; finite-difference oracles rely on it
    r = r.astype(np.result_type(r.dtype, np.float64), copy=False)
    if r.shape[-1:] != (4,):
        raise ValueError(f"expected radii with trailing dimension 4, got shape {r.shape}")
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise ValueError("radii must be finite and strictly positive")
    if np.any(r > LARGE_RADIUS):
        warnings.warn(
            f"radius above {LARGE_RADIUS:g}: tanh saturates and derivatives degrade",
            LargeRadiusWarning,
            stacklevel=3,
        )
    return r


def _sech2(r: np.ndarray) -> np.ndarray:
    e = np.exp(-2.0 * r)
    return 4.0 * e / (1.0 + e) ** 2


def _q2(t: np.ndarray) -> np.ndarray:
    q2 = t.sum(axis=-1) ** 2 - 2.0 * (t * t).sum(axis=-1) + 4.0
    if np.any(q2 <= 0):
        raise DegenerateTetrahedronError("Q2 <= 0: tetrahedron is degenerate")
    return q2


def _lam(a, b, c):
    return a * b + a * c + b * c + 1.0


def _h_poly(ti, tj, tk, th):
    # d beta_{ij,kh} / d r_i, up to the positive prefactor
    return (
        2 * ti**2 * tj**2 + tj**2 * tk**2 + tj**2 * th**2
        + 2 * ti**2 * tj * tk + 2 * ti**2 * tj * th + 2 * ti**2 * tk * th
        + ti * tj**2 * tk + ti * tj**2 * th
        + 4 * ti * tj * tk * th - 2 * ti * tj**3 - tj**3 * tk - tj**3 * th
        - 2 * tj**2 - tk**2 - th**2
        + 6 * ti * tj + 3 * ti * tk + 3 * ti * th + 3 * tj * tk + 3 * tj * th
        + 2 * tk * th + 4
    )


def _o_poly(ti, tj, tk, th):
    # d Area_i / d r_j, up to the negative prefactor; symmetric in i <-> j
    return 2 - (tk - th) ** 2 + ti * (tj + tk + th) + tj * (ti + tk + th)


def _opposite_partial(tp, tq, tu, tv, s2u, lam_pqu, sq2):
    # d beta_{pq,uv} / d r_u
    return -s2u * (tp + tq) * (tp + tq + tu - tv) / (2.0 * sq2 * lam_pqu)


def _split(t):
    return t[..., _P], t[..., _Q], t[..., _U], t[..., _V]


def tet_q2(r) -> np.ndarray:
    """Non-degeneracy quantity ``(sum t)^2 - 2 sum t^2 + 4``; positive everywhere."""
    return _q2(np.tanh(_radii(r)))


def tet_cos_sin(r) -> tuple[np.ndarray, np.ndarray]:
    """Closed forms for ``cos`` and ``sin`` of the six dihedral angles."""
    t = np.tanh(_radii(r))
    return _cos_sin(t, _q2(t))


def _cos_sin(t, q2):
    tp, tq, tu, tv = _split(t)
    den = 2.0 * np.sqrt(_lam(tp, tq, tu) * _lam(tp, tq, tv))
    cos = (2.0 - tp**2 - tq**2 + (tp + tq) * (tu + tv)) / den
    sin = (tp + tq) * np.sqrt(q2)[..., None] / den
    return cos, sin


def tet_dihedral_angles(r) -> np.ndarray:
    """Dihedral angles at the six edge slots, shape ``(..., 6)``."""
    t = np.tanh(_radii(r))
    cos, sin = _cos_sin(t, _q2(t))
    return np.arctan2(sin, cos)


def _areas_from_beta(beta):
    return np.pi - np.stack([beta[..., list(CORNER_SLOTS[c])].sum(axis=-1) for c in range(4)], axis=-1)


def tet_vertex_areas(r) -> np.ndarray:
    """Areas of the four vertex triangles, shape ``(..., 4)``."""
    return _areas_from_beta(tet_dihedral_angles(r))


def _partials(t, s2, sq2):
    tp, tq, tu, tv = _split(t)
    s2p, s2q, s2u, s2v = _split(s2)
    lam_u = _lam(tp, tq, tu)
    lam_v = _lam(tp, tq, tv)
    d = np.zeros(t.shape[:-1] + (6, 4), dtype=t.dtype)
    sq = sq2[..., None]
    d_u = _opposite_partial(tp, tq, tu, tv, s2u, lam_u, sq)
    d_v = _opposite_partial(tp, tq, tv, tu, s2v, lam_v, sq)
    d_p = s2p * _h_poly(tp, tq, tu, tv) / (2.0 * sq * lam_u * lam_v)
    d_q = s2q * _h_poly(tq, tp, tu, tv) / (2.0 * sq * lam_u * lam_v)
    slots = np.arange(6)
    d[..., slots, _P] = d_p
    d[..., slots, _Q] = d_q
    d[..., slots, _U] = d_u
    d[..., slots, _V] = d_v
    return d


def tet_dihedral_partials(r) -> np.ndarray:
    """``d beta_s / d r_c`` for slot ``s`` and corner ``c``, shape ``(..., 6, 4)``."""
    r = _radii(r)
    t = np.tanh(r)
    return _partials(t, _sech2(r), np.sqrt(_q2(t)))


def _jacobian(t, s2, sq2, dbeta):
    tp, tq, tu, tv = _split(t)
    s2p, s2q, _, _ = _split(s2)
    off = -s2p * s2q * _o_poly(tp, tq, tu, tv) / (
        sq2[..., None] * _lam(tp, tq, tu) * _lam(tp, tq, tv)
    )
    jac = np.empty(t.shape[:-1] + (4, 4), dtype=t.dtype)
    jac[..., _P, _Q] = off
    jac[..., _Q, _P] = off
    for c in range(4):
        jac[..., c, c] = -dbeta[..., list(CORNER_SLOTS[c]), c].sum(axis=-1)
    return jac


def tet_area_jacobian(r) -> np.ndarray:
    """``d Area_a / d r_b``, shape ``(..., 4, 4)``; exactly symmetric."""
    r = _radii(r)
    t = np.tanh(r)
    s2 = _sech2(r)
    sq2 = np.sqrt(_q2(t))
    return _jacobian(t, s2, sq2, _partials(t, s2, sq2))


@dataclass(frozen=True)
class TetGeometry:
    t: np.ndarray
    lam: dict
    q2: float
    beta: np.ndarray
    area: np.ndarray
    jac: np.ndarray

    def beta_at(self, p: int, q: int) -> float:
        from .triangulation import SLOT_INDEX

        return float(self.beta[SLOT_INDEX[(p, q)]])


def tet_geometry(r) -> TetGeometry:
    """All derived quantities for a single tetrahedron."""
    r = _radii(r)
    if r.shape != (4,):
        raise ValueError("tet_geometry takes a single tetrahedron's four radii")
    t = np.tanh(r)
    s2 = _sech2(r)
    q2 = _q2(t)
    sq2 = np.sqrt(q2)
    cos, sin = _cos_sin(t, q2)
    beta = np.arctan2(sin, cos)
    lam = {
        tri: _lam(*(t[c] for c in tri))
        for tri in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))
    }
    return TetGeometry(
        t=t,
        lam=lam,
        q2=float(q2),
        beta=beta,
        area=_areas_from_beta(beta),
        jac=_jacobian(t, s2, sq2, _partials(t, s2, sq2)),
    )


def tet_evaluate(r, jacobian: bool = False):
    """Batched ``(beta, area[, jac])`` sharing one pass over the radii."""
    r = _radii(r)
    t = np.tanh(r)
    q2 = _q2(t)
    cos, sin = _cos_sin(t, q2)
    beta = np.arctan2(sin, cos)
    area = _areas_from_beta(beta)
    if not jacobian:
        return beta, area
    s2 = _sech2(r)
    sq2 = np.sqrt(q2)
    return beta, area, _jacobian(t, s2, sq2, _partials(t, s2, sq2))
