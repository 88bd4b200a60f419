"""Flat connections, loop holonomies, flux spectra and Chern numbers.

Connections are LinkFields of integrated phases.  The holonomy of a
closed link cycle is the phase sum reduced to the canonical branch
(-pi, pi]; flat connections (all plaquette sums zero) carry physics only
through these holonomies, which is the discrete Aharonov-Bohm setup: the
flux through the "inside" of a ring or cylinder shifts the spectrum even
though the field strength on the lattice vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeError, plaquette_sums
from .operators import build_hamiltonian, eigenvalues
from .reconstruct import wrap_angle


class TopologyError(LatticeError):
    """Operation requires periodic directions the lattice does not have."""


@dataclass(frozen=True)
class HolonomyClass:
    """One canonical-branch angle per fundamental-group generator."""

    angles: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "angles", tuple(float(wrap_angle(a)) for a in self.angles)
        )

    def __len__(self):
        return len(self.angles)


def loop_holonomy(lattice, theta, cycle):
    """Phase sum of a LinkField along a closed link cycle, in (-pi, pi]."""
    cycle = np.asarray(cycle, dtype=int)
    dsts = lattice.link_dst[cycle]
    srcs = lattice.link_src[cycle]
    if not (np.all(dsts[:-1] == srcs[1:]) and dsts[-1] == srcs[0]):
        raise LatticeError("cycle is not closed")
    return float(wrap_angle(np.asarray(theta)[cycle].sum()))


def flat_connection(lattice, target):
    """Flat LinkField whose generator holonomies match the target.

    Each angle is spread uniformly along its periodic axis: every +axis
    link carries angle / N_k, so all plaquette sums cancel exactly.
    Raw angles are spread literally (alpha and alpha + 2 pi give distinct,
    gauge-equivalent connections); pass a HolonomyClass to spread the
    canonical-branch representative instead.
    """
    if isinstance(target, HolonomyClass):
        angles = target.angles
    else:
        angles = tuple(float(a) for a in np.atleast_1d(target))
    n_gen = len(lattice.pi1_generators)
    if len(angles) != n_gen:
        raise TopologyError(
            f"{len(angles)} holonomy targets for {n_gen} fundamental-group "
            f"generators ({lattice.spec.topology})"
        )
    theta = np.zeros(lattice.n_links)
    periodic_axes = [k for k in range(lattice.ndim) if lattice.periodic[k]]
    for angle, k in zip(angles, periodic_axes):
        plus = (
            (lattice.link_axes[:, 0] == k)
            & (lattice.link_axes[:, 1] == k)
            & (lattice.link_disp[:, k] > 0)
        )
        theta[plus] = angle / lattice.sizes[k]
        theta[lattice.link_reverse[plus]] = -angle / lattice.sizes[k]
    return theta


def flatness_defect(lattice, theta):
    """Largest plaquette phase sum magnitude (zero for flat connections)."""
    s = plaquette_sums(lattice, theta)
    return float(np.max(np.abs(s), initial=0.0))


def ab_spectrum(lattice, m, alphas, g=None, phi=None):
    """Spectral flow: eigenvalues of H(flat connection with holonomy alpha).

    The lattice must have exactly one periodic axis (ring or cylinder).
    Returns an array of shape (len(alphas), n_sites) with each row sorted.
    """
    if len(lattice.pi1_generators) != 1:
        raise TopologyError(
            "spectral flow needs exactly one periodic direction (ring or cylinder)"
        )
    from .lattice import constant_metric

    if g is None:
        g = constant_metric(lattice)
    alphas = np.asarray(alphas, dtype=float)
    table = np.empty((len(alphas), lattice.n_sites))
    for row, alpha in enumerate(alphas):
        theta = flat_connection(lattice, (alpha,))
        H = build_hamiltonian(lattice, g, theta, phi, m)
        table[row] = eigenvalues(H)
    return table


def chern_number(lattice, theta):
    """First Chern number of a connection on a closed 2D lattice.

    Sum of principal-branch plaquette phase sums over 2 pi, rounded; the
    pre-rounding value must sit within 1e-6 of an integer, otherwise the
    per-plaquette fluxes are too large for branch consistency.
    """
    if lattice.spec.topology != "torus":
        raise TopologyError("Chern number needs a closed 2D lattice (torus)")
    fluxes = wrap_angle(plaquette_sums(lattice, theta))
    total = float(fluxes.sum()) / (2 * np.pi)
    nearest = round(total)
    if abs(total - nearest) > 1e-6:
        raise LatticeError(
            f"total flux / 2 pi = {total:.9g} is not an integer; "
            "per-plaquette phases exceed the principal branch"
        )
    return int(nearest)
