"""Discretized configuration spaces.

A lattice is a product grid in d in {1,2,3} dimensions with a mix of
periodic and open (Dirichlet) axes, fixed by a named topology:

    interval   d=1, open
    ring       d=1, periodic
    rectangle  d=2, open x open
    cylinder   d=2, periodic x open
    torus      d=2, periodic x periodic
    box3       d=3, open

Cells and fields:
  * sites carry integer coordinates and embedding positions x_k = i_k * h_k
  * directed links join nearest neighbours along each axis, plus (for
    d >= 2) the two diagonals of every 2D coordinate plane; these carry
    the metric cross terms
  * plaquettes are the elementary axis 2-cells (oriented link cycles)
  * one generating cycle of the fundamental group per periodic axis

Fields are plain numpy arrays:
  * ScalarField  -- one float per site, shape (n_sites,)
  * LinkField    -- one float per directed link, shape (n_links,),
    antisymmetric under link reversal.  Connection link fields store the
    integrated line integral of the one-form along the link (a phase),
    not a per-length component; this makes d0, gauge shifts and loop
    holonomies exact identities.
  * MetricField  -- one symmetric positive-definite d x d matrix of
    inverse-metric components per site, shape (n_sites, d, d)

Everything is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOPOLOGIES = {
    # name -> (dimension, periodic flags per axis)
    "interval": (1, (False,)),
    "ring": (1, (True,)),
    "rectangle": (2, (False, False)),
    "cylinder": (2, (True, False)),
    "torus": (2, (True, True)),
    "box3": (3, (False, False, False)),
}


class LatticeError(ValueError):
    """Invalid lattice specification or field data."""


@dataclass(frozen=True)
class LatticeSpec:
    """Shape of a discretized configuration space.

    sizes are per-axis site counts (each >= 3), spacings the per-axis
    lattice constants h_k > 0.  Periodic axes are fixed by the topology;
    open axes are Dirichlet (sites outside the box simply absent).
    """

    topology: str
    sizes: tuple
    spacings: tuple

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise LatticeError(f"unknown topology {self.topology!r}")
        ndim, _ = TOPOLOGIES[self.topology]
        sizes = tuple(int(n) for n in self.sizes)
        spacings = tuple(float(h) for h in self.spacings)
        if len(sizes) != ndim or len(spacings) != ndim:
            raise LatticeError(
                f"topology {self.topology!r} is {ndim}-dimensional, got "
                f"sizes={sizes} spacings={spacings}"
            )
        if any(n < 3 for n in sizes):
            raise LatticeError(f"all sizes must be >= 3, got {sizes}")
        if any(h <= 0 for h in spacings):
            raise LatticeError(f"all spacings must be > 0, got {spacings}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "spacings", spacings)

    @property
    def ndim(self):
        return TOPOLOGIES[self.topology][0]

    @property
    def periodic(self):
        return TOPOLOGIES[self.topology][1]


@dataclass(frozen=True)
class Lattice:
    """A built lattice: sites, directed links, plaquettes, pi_1 cycles.

    Link arrays are aligned: link i runs link_src[i] -> link_dst[i] with
    minimal-image displacement link_disp[i] (shape (d,)) and reverse
    partner link_reverse[i].  link_axes[i] = (k, k) for an axis-k link
    and (k, l), k < l, for a plane diagonal; link_diag_sign[i] is the
    product of the two step signs on a diagonal (+1 on axis links).
    plaq_links[p] holds the four directed links traversing plaquette p's
    boundary (all with coefficient +1 against antisymmetric LinkFields).
    """

    spec: LatticeSpec
    coords: np.ndarray        # (n_sites, d) int
    positions: np.ndarray     # (n_sites, d) float
    link_src: np.ndarray      # (n_links,) int
    link_dst: np.ndarray      # (n_links,) int
    link_disp: np.ndarray     # (n_links, d) float
    link_reverse: np.ndarray  # (n_links,) int
    link_axes: np.ndarray     # (n_links, 2) int
    link_diag_sign: np.ndarray  # (n_links,) int
    plaq_links: np.ndarray    # (n_plaq, 4) int
    plaq_axes: np.ndarray     # (n_plaq, 2) int
    pi1_generators: tuple     # one closed link-index cycle per periodic axis
    _link_lookup: dict = field(repr=False, default_factory=dict)

    @property
    def ndim(self):
        return self.spec.ndim

    @property
    def n_sites(self):
        return len(self.coords)

    @property
    def n_links(self):
        return len(self.link_src)

    @property
    def sizes(self):
        return self.spec.sizes

    @property
    def spacings(self):
        return self.spec.spacings

    @property
    def periodic(self):
        return self.spec.periodic

    def site_index(self, coord):
        return int(np.ravel_multi_index(tuple(coord), self.sizes))

    def link_index(self, site, step):
        """Directed link leaving `site` with integer step vector `step`."""
        return self._link_lookup[(int(site), tuple(int(s) for s in step))]

    def axis_extent(self, k):
        """Physical length of axis k (circumference when periodic)."""
        n, h = self.sizes[k], self.spacings[k]
        return n * h if self.periodic[k] else (n - 1) * h

    def interior_mask(self):
        """Sites not touching any open-axis boundary."""
        mask = np.ones(self.n_sites, dtype=bool)
        for k in range(self.ndim):
            if not self.periodic[k]:
                c = self.coords[:, k]
                mask &= (c > 0) & (c < self.sizes[k] - 1)
        return mask

    def graph_distance(self, i, j):
        """Distance in the link graph (axis steps and plane diagonals).

        Each move changes at most two coordinates by one unit, so the
        distance of a minimal-image integer displacement delta is
        max(max_k |delta_k|, ceil(sum_k |delta_k| / 2)).
        """
        delta = self.coords[j] - self.coords[i]
        for k in range(self.ndim):
            if self.periodic[k]:
                n = self.sizes[k]
                delta[k] = (delta[k] + n // 2) % n - n // 2
        a = np.abs(delta)
        return int(max(a.max(initial=0), -(-int(a.sum()) // 2)))

    def minimal_image_displacement(self, i, j):
        """Physical displacement from site i to site j, minimal image."""
        delta = (self.coords[j] - self.coords[i]).astype(float)
        for k in range(self.ndim):
            if self.periodic[k]:
                n = self.sizes[k]
                delta[k] = (delta[k] + n // 2) % n - n // 2
        return delta * np.asarray(self.spacings)


def _axis_steps(ndim):
    steps = []
    for k in range(ndim):
        e = np.zeros(ndim, dtype=int)
        e[k] = 1
        steps.append((e.copy(), (k, k), 1))
        steps.append((-e, (k, k), 1))
    return steps


def _diag_steps(ndim):
    steps = []
    for k in range(ndim):
        for l in range(k + 1, ndim):
            for sk in (1, -1):
                for sl in (1, -1):
                    e = np.zeros(ndim, dtype=int)
                    e[k], e[l] = sk, sl
                    steps.append((e, (k, l), sk * sl))
    return steps


def build_lattice(spec):
    """Construct a Lattice from its spec.

    Rejects site counts below 3 (stencils would be underdetermined and
    periodic wrap links would coincide with their reverses).
    """
    if not isinstance(spec, LatticeSpec):
        spec = LatticeSpec(**spec) if isinstance(spec, dict) else LatticeSpec(*spec)
    ndim = spec.ndim
    sizes = spec.sizes
    spacings = np.asarray(spec.spacings)
    periodic = spec.periodic

    coords = np.stack(
        [a.ravel() for a in np.meshgrid(*[np.arange(n) for n in sizes], indexing="ij")],
        axis=1,
    ).astype(int)
    positions = coords * spacings
    n_sites = len(coords)

    def wrap(c):
        out = []
        for k in range(ndim):
            v = c[k]
            if periodic[k]:
                v %= sizes[k]
            elif v < 0 or v >= sizes[k]:
                return None
            out.append(int(v))
        return tuple(out)

    steps = _axis_steps(ndim) + _diag_steps(ndim)
    src, dst, disp, axes, dsign = [], [], [], [], []
    lookup = {}
    for s in range(n_sites):
        c = coords[s]
        for step, ax, sg in steps:
            target = wrap(c + step)
            if target is None:
                continue
            j = int(np.ravel_multi_index(target, sizes))
            lookup[(s, tuple(int(v) for v in step))] = len(src)
            src.append(s)
            dst.append(j)
            disp.append(step * spacings)
            axes.append(ax)
            dsign.append(sg)
    src = np.asarray(src, dtype=int)
    dst = np.asarray(dst, dtype=int)
    disp = np.asarray(disp, dtype=float).reshape(len(src), ndim)
    axes = np.asarray(axes, dtype=int)
    dsign = np.asarray(dsign, dtype=int)

    steps_int = {idx: key[1] for key, idx in lookup.items()}
    reverse = np.empty(len(src), dtype=int)
    for idx in range(len(src)):
        neg = tuple(-v for v in steps_int[idx])
        reverse[idx] = lookup[(int(dst[idx]), neg)]

    plaq_links, plaq_axes = [], []
    for s in range(n_sites):
        c = coords[s]
        for k in range(ndim):
            for l in range(k + 1, ndim):
                ek = np.zeros(ndim, dtype=int)
                el = np.zeros(ndim, dtype=int)
                ek[k], el[l] = 1, 1
                if wrap(c + ek) is None or wrap(c + el) is None:
                    continue
                a = s
                b = int(np.ravel_multi_index(wrap(c + ek), sizes))
                d2 = int(np.ravel_multi_index(wrap(c + ek + el), sizes))
                e2 = int(np.ravel_multi_index(wrap(c + el), sizes))
                cyc = [
                    lookup[(a, tuple(ek))],
                    lookup[(b, tuple(el))],
                    lookup[(d2, tuple(-ek))],
                    lookup[(e2, tuple(-el))],
                ]
                plaq_links.append(cyc)
                plaq_axes.append((k, l))
    plaq_links = np.asarray(plaq_links, dtype=int).reshape(len(plaq_links), 4)
    plaq_axes = np.asarray(plaq_axes, dtype=int).reshape(len(plaq_axes), 2)

    gens = []
    for k in range(ndim):
        if not periodic[k]:
            continue
        cycle = []
        c = np.zeros(ndim, dtype=int)
        ek = np.zeros(ndim, dtype=int)
        ek[k] = 1
        for _ in range(sizes[k]):
            s = int(np.ravel_multi_index(wrap(c), sizes))
            cycle.append(lookup[(s, tuple(ek))])
            c = c + ek
        gens.append(np.asarray(cycle, dtype=int))

    arrays = dict(
        coords=coords,
        positions=positions,
        link_src=src,
        link_dst=dst,
        link_disp=disp,
        link_reverse=reverse,
        link_axes=axes,
        link_diag_sign=dsign,
        plaq_links=plaq_links,
        plaq_axes=plaq_axes,
    )
    for arr in arrays.values():
        arr.setflags(write=False)
    for cyc in gens:
        cyc.setflags(write=False)
    return Lattice(
        spec=spec,
        pi1_generators=tuple(gens),
        _link_lookup=lookup,
        **arrays,
    )


# ---------------------------------------------------------------------------
# fields

def scalar_field(lattice, values):
    """Validate and return a ScalarField array."""
    f = np.asarray(values, dtype=float)
    if f.shape != (lattice.n_sites,):
        raise LatticeError(f"scalar field shape {f.shape} != ({lattice.n_sites},)")
    if not np.all(np.isfinite(f)):
        raise LatticeError("scalar field has non-finite entries")
    return f


def link_field(lattice, values):
    """Validate a LinkField: finite and antisymmetric under reversal."""
    w = np.asarray(values, dtype=float)
    if w.shape != (lattice.n_links,):
        raise LatticeError(f"link field shape {w.shape} != ({lattice.n_links},)")
    if not np.all(np.isfinite(w)):
        raise LatticeError("link field has non-finite entries")
    defect = np.max(np.abs(w + w[lattice.link_reverse]), initial=0.0)
    if defect > 1e-12 * max(1.0, np.max(np.abs(w))):
        raise LatticeError(f"link field not antisymmetric (defect {defect:g})")
    return w


def zero_link_field(lattice):
    return np.zeros(lattice.n_links)


def d0(lattice, f):
    """Discrete differential of a scalar field: value f_j - f_i on link i->j.

    Plain difference; periodic wrap is handled entirely by the site
    identification, never by unwrapping values.
    """
    f = np.asarray(f, dtype=float)
    return f[lattice.link_dst] - f[lattice.link_src]


def generators_pi1(lattice):
    """Generating link cycles of the fundamental group (may be empty)."""
    return list(lattice.pi1_generators)


def connection_from_components(lattice, component_funcs):
    """Integrated link phases from per-axis component functions A_k(x).

    Midpoint rule: theta_l = sum_k A_k(midpoint) * disp_k.  Exactly
    antisymmetric because both directions share the midpoint.
    """
    mid = lattice.positions[lattice.link_src] + 0.5 * lattice.link_disp
    theta = np.zeros(lattice.n_links)
    for k, fn in enumerate(component_funcs):
        if fn is None:
            continue
        theta += np.array([fn(m) for m in mid]) * lattice.link_disp[:, k]
    return theta


def metric_field(lattice, values):
    """Validate a MetricField: symmetric positive definite at every site."""
    g = np.asarray(values, dtype=float)
    d = lattice.ndim
    if g.shape != (lattice.n_sites, d, d):
        raise LatticeError(f"metric field shape {g.shape} != ({lattice.n_sites}, {d}, {d})")
    if np.max(np.abs(g - np.swapaxes(g, 1, 2))) > 1e-12 * max(1.0, np.max(np.abs(g))):
        raise LatticeError("metric field not symmetric")
    if np.min(np.linalg.eigvalsh(g)) <= 0:
        raise LatticeError("metric field not positive definite")
    return g


def constant_metric(lattice, matrix=None):
    """MetricField with the same matrix on every site (identity default)."""
    d = lattice.ndim
    m = np.eye(d) if matrix is None else np.asarray(matrix, dtype=float)
    if m.shape == ():
        m = float(m) * np.eye(d)
    return np.broadcast_to(m, (lattice.n_sites, d, d)).copy()


def plaquette_sums(lattice, w):
    """Signed boundary sum of a LinkField over every plaquette."""
    if len(lattice.plaq_links) == 0:
        return np.zeros(0)
    return np.asarray(w)[lattice.plaq_links].sum(axis=1)
