"""Named closed-form field profiles for scenario configs.

Profiles are small dictionaries {profile: name, ...numeric parameters}
resolved against a lattice into callables over chart positions.  No
expression language: every profile is a fixed closed form, which keeps
scenario runs deterministic and the config schema finite.

    constant       {value}
    zero           {}
    sine           {base, amplitude, axis, periods, phase}
                   base + amplitude * sin(2 pi periods x_axis / L + phase)
    gaussian_bump  {base, amplitude, center, width, axis}
                   center/width are fractions of the axis extent
    polynomial     {coeffs, axis}     sum_i coeffs[i] * x_axis^i
"""

from __future__ import annotations

import numpy as np

from .holonomy import flat_connection
from .lattice import connection_from_components


class ProfileError(ValueError):
    """Unknown profile name or bad profile parameters."""


def resolve_profile(spec, lattice, path="profile"):
    """Profile dict -> callable(position vector) -> float."""
    if spec is None:
        return lambda pos: 0.0
    if not isinstance(spec, dict) or "profile" not in spec:
        raise ProfileError(f"{path}: expected a dict with a 'profile' key")
    kind = spec["profile"]
    params = {k: v for k, v in spec.items() if k != "profile"}

    def need(name, default=None):
        if name in params:
            return float(params.pop(name))
        if default is not None:
            return float(default)
        raise ProfileError(f"{path}: profile {kind!r} needs parameter {name!r}")

    if kind == "constant":
        value = need("value")
        fn = lambda pos: value  # noqa: E731
    elif kind == "zero":
        fn = lambda pos: 0.0  # noqa: E731
    elif kind == "sine":
        base = need("base", 0.0)
        amplitude = need("amplitude")
        axis = int(need("axis", 0))
        periods = need("periods", 1.0)
        phase = need("phase", 0.0)
        L = lattice.axis_extent(axis)
        fn = lambda pos: base + amplitude * np.sin(  # noqa: E731
            2.0 * np.pi * periods * pos[axis] / L + phase
        )
    elif kind == "gaussian_bump":
        base = need("base", 0.0)
        amplitude = need("amplitude")
        axis = int(need("axis", 0))
        L = lattice.axis_extent(axis)
        center = need("center", 0.5) * L
        width = need("width", 1.0 / 6.0) * L
        periodic = lattice.periodic[axis]
        span = lattice.sizes[axis] * lattice.spacings[axis]

        def fn(pos, _c=center, _w=width, _p=periodic, _s=span, _a=axis):
            dx = pos[_a] - _c
            if _p:
                dx = (dx + _s / 2) % _s - _s / 2
            return base + amplitude * np.exp(-0.5 * (dx / _w) ** 2)

    elif kind == "polynomial":
        coeffs = [float(c) for c in params.pop("coeffs", [])]
        if not coeffs:
            raise ProfileError(f"{path}: polynomial needs nonempty coeffs")
        axis = int(need("axis", 0))
        fn = lambda pos: float(np.polyval(coeffs[::-1], pos[axis]))  # noqa: E731
    else:
        raise ProfileError(f"{path}: unknown profile {kind!r}")

    if params:
        raise ProfileError(f"{path}: unused parameters {sorted(params)}")
    return fn


def scalar_from_profile(lattice, spec, path="field"):
    fn = resolve_profile(spec, lattice, path)
    return np.array([fn(p) for p in lattice.positions])


def metric_from_profiles(lattice, component_specs, path="fields.metric"):
    """MetricField from per-component profiles keyed 'k,l' (upper triangle).

    Unspecified diagonal components default to 1, off-diagonals to 0.
    """
    d = lattice.ndim
    g = np.zeros((lattice.n_sites, d, d))
    for k in range(d):
        g[:, k, k] = 1.0
    if component_specs:
        for key, spec in component_specs.items():
            try:
                k, l = (int(p) for p in str(key).split(","))
            except ValueError as exc:
                raise ProfileError(f"{path}: bad component key {key!r}") from exc
            if not (0 <= k < d and 0 <= l < d):
                raise ProfileError(f"{path}: component {key!r} outside dimension {d}")
            fn = resolve_profile(spec, lattice, f"{path}.{key}")
            vals = np.array([fn(p) for p in lattice.positions])
            g[:, k, l] = vals
            g[:, l, k] = vals
    return g


def metric_function_from_profiles(lattice, component_specs, path="fields.metric"):
    """Closed-form inverse-metric callable q -> g^kl(q) for analytic use."""
    d = lattice.ndim
    fns = {}
    if component_specs:
        for key, spec in component_specs.items():
            k, l = (int(p) for p in str(key).split(","))
            fns[(k, l)] = resolve_profile(spec, lattice, f"{path}.{key}")

    def gfun(q):
        g = np.eye(d)
        for (k, l), fn in fns.items():
            g[k, l] = fn(q)
            g[l, k] = g[k, l]
        return g

    return gfun


def connection_from_profiles(lattice, connection_spec, path="fields.connection"):
    """LinkField of integrated phases from component profiles + holonomies."""
    if not connection_spec:
        return np.zeros(lattice.n_links)
    comps = connection_spec.get("components")
    theta = np.zeros(lattice.n_links)
    if comps:
        if len(comps) != lattice.ndim:
            raise ProfileError(
                f"{path}.components: need {lattice.ndim} per-axis profiles"
            )
        fns = [
            resolve_profile(c, lattice, f"{path}.components[{k}]")
            for k, c in enumerate(comps)
        ]
        theta = connection_from_components(lattice, fns)
    holonomies = connection_spec.get("holonomies")
    if holonomies:
        theta = theta + flat_connection(lattice, tuple(float(a) for a in holonomies))
    return theta


def time_scale_function(spec, path="fields.time.scale"):
    """Scalar scale factor profile over time: constant, linear or explicit."""
    if spec is None:
        return lambda t: 1.0
    if isinstance(spec, (list, tuple)):
        vals = [float(v) for v in spec]
        return lambda t, _v=vals: _v[int(round(t))] if 0 <= int(round(t)) < len(_v) else 1.0
    if not isinstance(spec, dict):
        raise ProfileError(f"{path}: expected dict or list")
    kind = spec.get("profile")
    if kind == "constant":
        v = float(spec.get("value", 1.0))
        return lambda t: v
    if kind == "linear":
        rate = float(spec.get("rate", 0.0))
        return lambda t: 1.0 + rate * t
    raise ProfileError(f"{path}: unknown time scale profile {kind!r}")
