"""Discrete exterior calculus on the product complex Q x time.

The spacetime complex is cubical: vertices are (site, time-sample)
pairs; edges, faces and 3-cells are spanned by subsets of the spacetime
axes, ordered (t, x, y, z), anchored at their lowest-corner vertex and
oriented by increasing axis index.  Incidence follows

    boundary[v; a_1 < ... < a_k] =
        sum_i (-1)^i ([v; drop a_i] - [v + e_{a_i}; drop a_i])

so applying the coboundary twice annihilates every cochain by integer
arithmetic alone.  Only axis links enter the complex (plane diagonals
are stencil decoration, not 1-cells).

The connection 1-cochain is assembled as spatial link phases plus
potential * dt on time edges.  Sources come from the codifferential
route j = *d*F implemented with diagonal Hodge matrices whose volume
factors are evaluated at each cell's anchor vertex; a cell and its
complement then share the anchor, the two Hodge factors cancel to a pure
sign, and the continuity identity d*j = 0 reduces to the structural
d.d = 0 even on open boundaries.  Spatial metrics must be diagonal.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class ComplexError(ValueError):
    """Invalid cell complex construction or cochain algebra."""


@dataclass(frozen=True)
class Cochain:
    """Real values on the k-cells of a spacetime complex."""

    complex: "SpacetimeComplex"
    degree: int
    values: np.ndarray

    def __post_init__(self):
        want = self.complex.n_cells(self.degree)
        got = len(self.values)
        if got != want:
            raise ComplexError(
                f"degree-{self.degree} cochain needs {want} values, got {got}"
            )


@dataclass(frozen=True)
class SpacetimeComplex:
    lattice: object
    n_t: int
    dt: float
    cell_axes: tuple      # per degree, list of axis tuples
    cell_anchor: tuple    # per degree, int array of anchor vertices
    cell_lookup: tuple    # per degree, dict (axes, anchor) -> index
    incidence: tuple      # D_k: (k+1)-cells x k-cells, k = 0..2
    edge_link: np.ndarray  # lattice link id for spatial edges, -1 for time
    edge_time: np.ndarray  # time sample of each edge's anchor
    edge_site: np.ndarray  # anchor site of each edge

    @property
    def n(self):
        return self.lattice.ndim + 1

    @property
    def spacings(self):
        return (self.dt,) + tuple(self.lattice.spacings)

    def n_cells(self, k):
        if k == 0:
            return self.n_t * self.lattice.n_sites
        if 1 <= k <= 3:
            return len(self.cell_anchor[k])
        return 0

    def content_hash(self):
        spec = self.lattice.spec
        text = repr((spec.topology, spec.sizes, spec.spacings, self.n_t, self.dt))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def cochain(self, k, values=None):
        vals = np.zeros(self.n_cells(k)) if values is None else np.asarray(values, float)
        return Cochain(self, k, vals)


def build_spacetime_complex(lattice, n_t, dt):
    """Cubical complex on lattice x {0..n_t-1} time samples."""
    if n_t < 1:
        raise ComplexError("need at least one time sample")
    if dt <= 0:
        raise ComplexError("dt must be positive")
    d = lattice.ndim
    n_ax = d + 1
    ns = lattice.n_sites

    def vert(site, it):
        return it * ns + site

    def step(v, axis):
        """Vertex one cell over along a spacetime axis, or None."""
        it, site = divmod(v, ns)
        if axis == 0:
            return v + ns if it + 1 < n_t else None
        try:
            link = lattice.link_index(site, _unit_step(d, axis - 1))
        except KeyError:
            return None
        return vert(int(lattice.link_dst[link]), it)

    n_verts = ns * n_t
    edge_axes, edge_anchor, edge_lookup = [], [], {}
    edge_link, edge_time, edge_site = [], [], []
    d0_rows, d0_cols, d0_vals = [], [], []
    for it in range(n_t):
        for k in range(d):
            stp = _unit_step(d, k)
            for link in range(lattice.n_links):
                if not _is_canonical_axis_link(lattice, link, k):
                    continue
                src, dst = int(lattice.link_src[link]), int(lattice.link_dst[link])
                v = vert(src, it)
                idx = len(edge_axes)
                edge_axes.append((k + 1,))
                edge_anchor.append(v)
                edge_lookup[((k + 1,), v)] = idx
                edge_link.append(link)
                edge_time.append(it)
                edge_site.append(src)
                d0_rows += [idx, idx]
                d0_cols += [vert(dst, it), v]
                d0_vals += [1.0, -1.0]
    for it in range(n_t - 1):
        for site in range(ns):
            v = vert(site, it)
            idx = len(edge_axes)
            edge_axes.append((0,))
            edge_anchor.append(v)
            edge_lookup[((0,), v)] = idx
            edge_link.append(-1)
            edge_time.append(it)
            edge_site.append(site)
            d0_rows += [idx, idx]
            d0_cols += [v + ns, v]
            d0_vals += [1.0, -1.0]

    face_axes, face_anchor, face_lookup = [], [], {}
    d1_rows, d1_cols, d1_vals = [], [], []
    for v in range(n_verts):
        for mu in range(n_ax):
            v_mu = step(v, mu)
            if v_mu is None:
                continue
            for nu in range(mu + 1, n_ax):
                v_nu = step(v, nu)
                if v_nu is None or step(v_mu, nu) is None:
                    continue
                idx = len(face_axes)
                face_axes.append((mu, nu))
                face_anchor.append(v)
                face_lookup[((mu, nu), v)] = idx
                for edge_key, sign in (
                    (((mu,), v), 1.0),
                    (((nu,), v_mu), 1.0),
                    (((mu,), v_nu), -1.0),
                    (((nu,), v), -1.0),
                ):
                    d1_rows.append(idx)
                    d1_cols.append(edge_lookup[edge_key])
                    d1_vals.append(sign)

    cube_axes, cube_anchor, cube_lookup = [], [], {}
    d2_rows, d2_cols, d2_vals = [], [], []
    for v in range(n_verts):
        for mu in range(n_ax):
            v_mu = step(v, mu)
            if v_mu is None:
                continue
            for nu in range(mu + 1, n_ax):
                v_nu = step(v, nu)
                if v_nu is None or step(v_mu, nu) is None:
                    continue
                for rho in range(nu + 1, n_ax):
                    v_rho = step(v, rho)
                    if v_rho is None:
                        continue
                    if step(v_mu, rho) is None or step(v_nu, rho) is None:
                        continue
                    if step(step(v_mu, nu), rho) is None:
                        continue
                    idx = len(cube_axes)
                    cube_axes.append((mu, nu, rho))
                    cube_anchor.append(v)
                    cube_lookup[((mu, nu, rho), v)] = idx
                    for face_key, sign in (
                        (((nu, rho), v), -1.0),
                        (((nu, rho), v_mu), 1.0),
                        (((mu, rho), v), 1.0),
                        (((mu, rho), v_nu), -1.0),
                        (((mu, nu), v), -1.0),
                        (((mu, nu), v_rho), 1.0),
                    ):
                        d2_rows.append(idx)
                        d2_cols.append(face_lookup[face_key])
                        d2_vals.append(sign)

    n_edges, n_faces, n_cubes = len(edge_axes), len(face_axes), len(cube_axes)
    D0 = sp.csr_matrix((d0_vals, (d0_rows, d0_cols)), shape=(n_edges, n_verts))
    D1 = sp.csr_matrix((d1_vals, (d1_rows, d1_cols)), shape=(n_faces, n_edges))
    D2 = sp.csr_matrix((d2_vals, (d2_rows, d2_cols)), shape=(n_cubes, n_faces))

    return SpacetimeComplex(
        lattice=lattice,
        n_t=n_t,
        dt=dt,
        cell_axes=(
            [()] * n_verts,
            edge_axes,
            face_axes,
            cube_axes,
        ),
        cell_anchor=(
            np.arange(n_verts),
            np.asarray(edge_anchor, dtype=int),
            np.asarray(face_anchor, dtype=int),
            np.asarray(cube_anchor, dtype=int),
        ),
        cell_lookup=(
            {((), v): v for v in range(n_verts)},
            edge_lookup,
            face_lookup,
            cube_lookup,
        ),
        incidence=(D0, D1, D2),
        edge_link=np.asarray(edge_link, dtype=int),
        edge_time=np.asarray(edge_time, dtype=int),
        edge_site=np.asarray(edge_site, dtype=int),
    )


def _unit_step(d, k):
    e = [0] * d
    e[k] = 1
    return tuple(e)


def _is_canonical_axis_link(lattice, link, axis):
    ax = lattice.link_axes[link]
    return (
        ax[0] == axis
        and ax[1] == axis
        and lattice.link_disp[link][axis] > 0
    )


def assemble_potential(cx, A_series, phi_series, dt=None):
    """Spacetime connection 1-cochain from per-sample (A, phi) data.

    Spatial edges carry the integrated link phase of their sample; time
    edges carry phi * dt at the source vertex.
    """
    if dt is not None and abs(dt - cx.dt) > 1e-15 * max(1.0, cx.dt):
        raise ComplexError("dt does not match the complex")
    A_series = list(A_series)
    phi_series = list(phi_series)
    if len(A_series) != cx.n_t or len(phi_series) != cx.n_t:
        raise ComplexError(
            f"need {cx.n_t} samples, got {len(A_series)} connection and "
            f"{len(phi_series)} potential samples"
        )
    vals = np.zeros(cx.n_cells(1))
    spatial = cx.edge_link >= 0
    for idx in np.flatnonzero(spatial):
        vals[idx] = A_series[cx.edge_time[idx]][cx.edge_link[idx]]
    for idx in np.flatnonzero(~spatial):
        vals[idx] = phi_series[cx.edge_time[idx]][cx.edge_site[idx]] * cx.dt
    return Cochain(cx, 1, vals)


def d_cochain(cx, omega):
    """Coboundary: signed boundary sums of a k-cochain over (k+1)-cells."""
    k = omega.degree
    if k not in (0, 1, 2):
        raise ComplexError(f"coboundary defined for degrees 0..2, got {k}")
    return Cochain(cx, k + 1, cx.incidence[k] @ omega.values)


def _permutation_sign(order):
    sign = 1
    order = list(order)
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if order[i] > order[j]:
                sign = -sign
    return sign


def _diag_upper(cx, metric, site, it):
    """Spacetime upper-metric diagonal (g00, g^11..) at a vertex."""
    if metric is None:
        return (-1.0,) + (1.0,) * cx.lattice.ndim
    fields = metric.fields
    sample = it if fields.shape[0] == cx.n_t else 0
    g = fields[sample][site]
    off = g - np.diag(np.diag(g))
    if np.max(np.abs(off), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(g))):
        raise ComplexError("Hodge star supports diagonal spatial metrics only")
    return (metric.g00,) + tuple(np.diag(g))


def hodge_factors(cx, k, metric):
    """Diagonal Hodge coefficients lambda for every k-cell.

    lambda = eps(S, S~) sqrt|det g| prod_{mu in S} g^mumu
             * prod_{nu in S~} h_nu / prod_{mu in S} h_mu
    with all metric data at the cell's anchor vertex, so a cell and its
    complement share factors and ** reduces to a pure sign.
    """
    h = np.asarray(cx.spacings)
    ns = cx.lattice.n_sites
    out = np.empty(cx.n_cells(k))
    for idx in range(cx.n_cells(k)):
        axes = cx.cell_axes[k][idx]
        anchor = int(cx.cell_anchor[k][idx])
        it, site = divmod(anchor, ns)
        gup = _diag_upper(cx, metric, site, it)
        comp = tuple(a for a in range(cx.n) if a not in axes)
        sqrt_det = 1.0 / np.sqrt(np.prod(gup[1:]))
        lam = _permutation_sign(axes + comp) * sqrt_det
        for mu in axes:
            lam *= gup[mu] / h[mu]
        for nu in comp:
            lam *= h[nu]
        out[idx] = lam
    return out


def hodge(cx, omega, metric=None):
    """Diagonal Hodge dual: k-cochain -> (n-k)-cochain.

    Dual cells are identified with the complementary-axes cell at the
    same anchor; on fully periodic directions the identification is a
    bijection and applying the star twice gives
    (-1)^(k(n-k)) * sign(det g) exactly.  Cells whose complement is
    missing (open boundary at the top) drop out.
    """
    k = omega.degree
    nk = cx.n - k
    if nk < 0 or nk > 3:
        raise ComplexError(f"no degree-{nk} cells in this complex")
    lam = hodge_factors(cx, k, metric)
    out = np.zeros(cx.n_cells(nk))
    lookup = cx.cell_lookup[nk]
    for idx in range(cx.n_cells(k)):
        axes = cx.cell_axes[k][idx]
        comp = tuple(a for a in range(cx.n) if a not in axes)
        target = lookup.get((comp, int(cx.cell_anchor[k][idx])))
        if target is not None:
            out[target] += lam[idx] * omega.values[idx]
    return Cochain(cx, nk, out)


def current(cx, potential, metric=None):
    """External sources j = *d*F for F = d(potential).

    Computed as the codifferential (star1^-1 D1^T star2) F so the
    continuity identity holds structurally; j is a 1-cochain on primal
    edges.
    """
    if potential.degree != 1:
        raise ComplexError("potential must be a 1-cochain")
    F = d_cochain(cx, potential)
    star2 = hodge_factors(cx, 2, metric)
    star1 = hodge_factors(cx, 1, metric)
    w = cx.incidence[1].T @ (star2 * F.values)
    return Cochain(cx, 1, w / star1)


def continuity_defect(cx, j, metric=None):
    """max |d * j|: exact zero up to rounding for j = current(...)."""
    if j.degree != 1:
        raise ComplexError("current must be a 1-cochain")
    star1 = hodge_factors(cx, 1, metric)
    top = cx.incidence[0].T @ (star1 * j.values)
    return float(np.max(np.abs(top), initial=0.0))
