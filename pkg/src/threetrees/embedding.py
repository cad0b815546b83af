"""The coordinate maps into ``T0 x T1 x T2`` and the product metric.

``f0`` sends a vertex to the piece of its canonical representative.  For
``i in {1, 2}`` and a vertex ``(v, p, z)``:

* if ``v`` has parity ``i``, ``f_i`` is the class of ``r_v(p)``; the fiber
  coordinate is dropped;
* otherwise ``f_i`` is the class of ``shadow_{(u, v)}(z)`` for a neighbour
  ``u`` of ``v`` (the smallest one whose line covers ``z``).  Gluing makes the
  choice irrelevant, which the test-suite checks rather than assumes.

:class:`ThreeTreeEmbedding` wraps this as a fitted transformer: ``fit`` takes a
:class:`~threetrees.complex.TotalComplex`, ``transform`` maps canonical vertex
ids to rows ``(t0, t1, t2)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .complex import ComplexVertex, TotalComplex, measure_rho
from .exceptions import TruncationError
from .quotient import QuotientTree, build_quotient_trees
from .validation import check_complex, check_vertex_ids

__all__ = [
    "ProductPoint",
    "InstanceConstants",
    "ThreeTreeEmbedding",
    "f0",
    "fi",
    "embed",
    "product_distance",
    "theoretical_constants",
]

UNDEFINED = -1


class ProductPoint(NamedTuple):
    t0: int
    t1: int
    t2: int


@dataclass(frozen=True)
class InstanceConstants:
    """Constants of the two-sided estimate, instantiated for one complex.

    Upper direction: ``d_i <= lip * d`` for ``i = 1, 2`` and
    ``d0 <= d / rho + 1``.  Lower direction:
    ``d <= d1 + d2 + 2 mu d0 + 4 mu``.
    """

    mu: int
    lip: int
    rho: int | None

    def __post_init__(self):
        if self.mu < 1 or self.lip < 1 or (self.rho is not None and self.rho < 1):
            raise ValueError("constants must be >= 1")

    def lower_bound(self, d0, d1, d2):
        return d1 + d2 + 2 * self.mu * d0 + 4 * self.mu

    def path_bound(self, n, d1, d2):
        return d1 + d2 + 2 * self.mu * n + 4 * self.mu

    def f0_ok(self, d0, d):
        # d0 <= d / rho + 1 in integers; no rho means no pieces at distance 2
        if self.rho is None:
            return np.asarray(d0) <= 1
        return self.rho * (np.asarray(d0) - 1) <= np.asarray(d)

    def fi_ok(self, di, d):
        return np.asarray(di) <= self.lip * np.asarray(d)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update({
            "lower_bound": f"d <= d1 + d2 + {2 * self.mu}*d0 + {4 * self.mu}",
            "fi_bound": f"d_i <= {self.lip}*d",
            "f0_bound": "d0 <= 1" if self.rho is None else f"d0 <= d/{self.rho} + 1",
        })
        return out


def theoretical_constants(c: TotalComplex, rho: int | None = None) -> InstanceConstants:
    if rho is None:
        rho = c.rho if c.rho is not None else measure_rho(c)
    return InstanceConstants(mu=int(c.mu), lip=int(c.lip), rho=rho)


# ------------------------------------------------------------- functional

def f0(c: TotalComplex, x: int) -> int:
    """Piece of the canonical representative of ``x``."""
    return c.describe(x).piece


def _neighbor_class(c: TotalComplex, q: QuotientTree, w: int, z: int, neighbor=None) -> int:
    nbrs = [neighbor] if neighbor is not None else sorted(c.bs.tree.neighbors(w))
    for u in nbrs:
        line = c.pieces[u].lines.get(c.bs.edge_id(u, w))
        if line is not None and abs(z) <= line.radius:
            return q.class_of(u, line.shadow.at(z))
    raise TruncationError(f"fiber level {z} of piece {w} is outside every neighbour's line window")


def fi(c: TotalComplex, q: QuotientTree, x, neighbor: int | None = None) -> int:
    """Class of ``x`` in ``T_i`` for ``i = q.parity``.

    ``x`` is a canonical id or an explicit :class:`ComplexVertex`
    description, so every representation of a glued vertex can be
    evaluated separately.  ``neighbor`` forces the neighbour used in the
    opposite-parity case.
    """
    desc = x if isinstance(x, ComplexVertex) else c.describe(x)
    v, pv, z = desc
    piece = c.pieces[v]
    if c.bs.parity[v] == q.parity:
        return q.class_of(v, piece.retract_index[piece.index(pv)])
    if q.empty:
        raise TruncationError(f"parity {q.parity} has no pieces")
    return _neighbor_class(c, q, v, z, neighbor)


def embed(c: TotalComplex, q1: QuotientTree, q2: QuotientTree, x: int) -> ProductPoint:
    return ProductPoint(f0(c, x), fi(c, q1, x), fi(c, q2, x))


def product_distance(c: TotalComplex, q1: QuotientTree, q2: QuotientTree, p: ProductPoint, q: ProductPoint) -> int:
    """l1 product metric."""
    return (c.bs.tree.distance(p.t0, q.t0) + q1.distance(p.t1, q.t1) + q2.distance(p.t2, q.t2))


# ------------------------------------------------------------- estimator

def _raw_coordinates(c: TotalComplex, q: QuotientTree) -> np.ndarray:
    """``f_i`` for every raw description (``-1`` where undefined)."""
    out = np.full(int(c.offsets[-1]), UNDEFINED, dtype=np.int64)
    zs = np.arange(-c.fiber_radius, c.fiber_radius + 1)
    tree = c.bs.tree
    for v, piece in c.pieces.items():
        lo, hi = int(c.offsets[v]), int(c.offsets[v + 1])
        if c.bs.parity[v] == q.parity:
            cls = q.classes_of(v, piece.retract_index)
            out[lo:hi] = np.repeat(cls, zs.size)
            continue
        if q.empty:
            continue
        per_z = np.full(zs.size, UNDEFINED, dtype=np.int64)
        for u in sorted(tree.neighbors(v), reverse=True):
            line = c.pieces[u].lines.get(c.bs.edge_id(u, v))
            if line is None:
                continue
            ok = np.abs(zs) <= line.radius
            per_z[ok] = q.classes_of(u, line.shadow.params[zs[ok] + line.radius])
        out[lo:hi] = np.tile(per_z, piece.n_points)
    return out


class ThreeTreeEmbedding(TransformerMixin, BaseEstimator):
    """Embed vertices of a glued complex into the product of three trees.

    Parameters
    ----------
    rho : int or None
        Separation constant for the ``f0`` bound.  ``None`` measures it on
        the fitted complex.
    check_well_defined : bool
        Verify during ``fit`` that every glued vertex gets the same
        coordinates from both of its descriptions.

    Attributes
    ----------
    complex_ : TotalComplex
    quotients_ : tuple of QuotientTree
        ``(T1, T2)``.
    coords_ : ndarray of shape (n_vertices, 3)
        ``(f0, f1, f2)`` per canonical vertex; ``-1`` marks coordinates lost
        to truncation.
    constants_ : InstanceConstants
    """

    def __init__(self, rho=None, check_well_defined=True):
        self.rho = rho
        self.check_well_defined = check_well_defined

    def fit(self, X, y=None):
        c = check_complex(X)
        q1, q2 = build_quotient_trees(c)
        raw = np.stack([
            c.raw_piece(np.arange(int(c.offsets[-1]))),
            _raw_coordinates(c, q1),
            _raw_coordinates(c, q2),
        ])
        if self.check_well_defined:
            glued = np.flatnonzero(c.partner >= 0)
            a, b = raw[1:, glued], raw[1:, c.partner[glued]]
            both = (a >= 0) & (b >= 0)
            if np.any(a[both] != b[both]):
                raise AssertionError("f_i disagrees across a flip identification")
        self.complex_ = c
        self.quotients_ = (q1, q2)
        self.raw_coords_ = raw
        self.coords_ = raw[:, c.rep].T.copy()
        rho = self.rho if self.rho is not None else (c.rho if c.rho is not None else measure_rho(c))
        self.constants_ = theoretical_constants(c, rho)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        """Rows ``(t0, t1, t2)`` for an array of canonical vertex ids."""
        check_is_fitted(self, "coords_")
        ids = check_vertex_ids(X, self.complex_.n)
        out = self.coords_[ids]
        bad = np.flatnonzero((out < 0).any(axis=1))
        if bad.size:
            raise TruncationError(f"vertex {int(ids[bad[0]])} has a coordinate outside the truncation")
        return out

    def fit_transform(self, X, y=None):
        """Fit, then return ``coords_`` for every vertex (``-1`` where undefined)."""
        return self.fit(X).coords_.copy()

    def coordinate_distances(self, P, Q) -> np.ndarray:
        """Per-factor distances ``(d0, d1, d2)`` between rows of two embeddings."""
        check_is_fitted(self, "coords_")
        P, Q = np.atleast_2d(P), np.atleast_2d(Q)
        q1, q2 = self.quotients_
        return np.column_stack([
            self.complex_.bs.tree.distance_many(P[:, 0], Q[:, 0]),
            q1.distance_many(P[:, 1], Q[:, 1]),
            q2.distance_many(P[:, 2], Q[:, 2]),
        ])

    def product_distance(self, P, Q) -> np.ndarray:
        return self.coordinate_distances(P, Q).sum(axis=1)

    def embed(self, x: int) -> ProductPoint:
        return ProductPoint(*(int(v) for v in self.transform([x])[0]))

    def audit_edges(self) -> dict:
        """Largest coordinate displacement along any edge of the complex.

        Each factor is audited on the edges where both ends have that
        coordinate defined.
        """
        check_is_fitted(self, "coords_")
        c = self.complex_
        u, v, w = c.edge_list()
        P, Q = self.coords_[u], self.coords_[v]
        trees = (c.bs.tree, *self.quotients_)
        out = {}
        for k, name in ((0, "max_f0_step"), (1, "max_f1_stretch"), (2, "max_f2_stretch")):
            ok = (P[:, k] >= 0) & (Q[:, k] >= 0)
            if not ok.any():
                out[name] = 0
                continue
            d = trees[k].distance_many(P[ok, k], Q[ok, k])
            out[name] = int(d.max()) if k == 0 else int((-(-d // w[ok])).max())
        out["edges_checked"] = int(u.size)
        return out
