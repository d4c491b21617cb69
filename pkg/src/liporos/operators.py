"""Lipschitz extension and the block operators built on it.

* ``mcshane_extend``: F(x) = min_y f(y) + L d(x, y).
* ``glue`` / ``restrict``: the inverse pair between functions on a union of
  well-separated blocks (sharing only the base point) and tuples of
  functions on the blocks. Gluing costs at most a factor 1/lambda.
* ``tower_restrict`` / ``tower_limit``: rebased restrictions to a sequence
  of subclouds and the reverse map. The reverse map takes a limit along a
  free ultrafilter in the infinite setting; here it is replaced by the
  extension of the last component (or a Cesaro mean of the last few).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundViolation, InputError
from .metric import LipFunction, PointCloud, lip_norm

_REL = 1e-12


def _extend_rows(values, L, dist_rows):
    """min_j values[j] + L * dist_rows[:, j], exact where a distance is zero."""
    out = np.min(values[None, :] + L * dist_rows, axis=1)
    hit_q, hit_j = np.nonzero(dist_rows == 0.0)
    out[hit_q] = values[hit_j]
    return out


def _check_L(f, L):
    lip = lip_norm(f) if len(f.cloud) > 1 else 0.0
    if L is None:
        return lip
    if L < lip * (1 - _REL):
        raise InputError(f"extension constant L={L!r} is below lip_norm(f)={lip!r}")
    return float(L)


def mcshane_extend(f: LipFunction, queries, L=None):
    """Values of the McShane extension of ``f`` at ambient points ``queries``."""
    L = _check_L(f, L)
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    rows = f.cloud.space.cdist(q, f.cloud.points)
    return _extend_rows(f.values, L, rows)


def mcshane_to_cloud(f: LipFunction, target: PointCloud, L=None) -> np.ndarray:
    """Extension evaluated on every point of ``target`` (same ambient space or
    a cloud sharing ``f.cloud``'s parent, for finite metric spaces)."""
    L = _check_L(f, L)
    src = f.cloud
    if src.parent is target and src.parent_indices is not None:
        rows = target.dist[:, src.parent_indices]
    else:
        rows = target.space.cdist(target.points, src.points)
    return _extend_rows(f.values, L, rows)


# ---------------------------------------------------------------- blocks


def _block_union(functions):
    """Assemble the union cloud; returns (cloud, position lists per block)."""
    clouds = [f.cloud for f in functions]
    parent = clouds[0].parent
    if parent is not None and all(c.parent is parent for c in clouds):
        bases = {int(c.parent_indices[c.base_index]) for c in clouds}
        if len(bases) != 1:
            raise InputError("blocks do not share a common base point")
        x0 = bases.pop()
        seen = {}
        for n, c in enumerate(clouds):
            for pi in c.parent_indices:
                pi = int(pi)
                if pi != x0 and pi in seen:
                    raise InputError(f"blocks {seen[pi]} and {n} overlap beyond the base point")
                seen[pi] = n
        union = np.array(sorted(seen | {x0: -1}))
        if len(union) == len(parent) and parent.base_index == x0:
            cloud = parent
        else:
            cloud = parent.subcloud(union, base_index=int(np.searchsorted(union, x0)))
        pos = [np.searchsorted(union, c.parent_indices) for c in clouds]
        return cloud, pos
    space = clouds[0].space
    x0 = clouds[0].base
    pts = [x0[None, :]]
    pos = []
    offset = 1
    for c in clouds:
        if space.distance(c.base, x0) != 0.0:
            raise InputError("blocks do not share a common base point")
        others = np.delete(np.arange(len(c)), c.base_index)
        p = np.zeros(len(c), dtype=int)
        p[others] = offset + np.arange(len(others))
        offset += len(others)
        pos.append(p)
        pts.append(c.points[others])
    try:
        cloud = PointCloud(space, np.vstack(pts), 0)
    except InputError as exc:
        raise InputError("blocks overlap beyond the base point") from exc
    return cloud, pos


def glue_bound(functions, lam) -> float:
    norms = [lip_norm(f) if len(f.cloud) > 1 else 0.0 for f in functions]
    return max(norms) / min(lam, 1.0)


def glue(functions, certificate, check=True) -> LipFunction:
    """The function equal to f_n on block n.

    ``certificate`` is a SeparationCertificate (or a bare lambda) for the
    blocks with respect to their shared base point.
    """
    if not functions:
        raise InputError("nothing to glue")
    lam = float(getattr(certificate, "lam", certificate))
    if not lam > 0:
        raise InputError("gluing needs a positive separation constant")
    cloud, pos = _block_union(functions)
    values = np.zeros(len(cloud))
    for f, p in zip(functions, pos):
        values[p] = f.values
    glued = LipFunction(cloud, values)
    if check and len(cloud) > 1:
        bound = glue_bound(functions, lam)
        measured = lip_norm(glued)
        if measured > bound * (1 + _REL) + _REL:
            raise BoundViolation(f"glued norm {measured!r} exceeds max block norm / lambda = {bound!r}")
    return glued


def restrict(f: LipFunction, blocks):
    """Restrictions of ``f`` to each block (base point added where missing)."""
    base = f.cloud.base_index
    covered = np.zeros(len(f.cloud), dtype=bool)
    out = []
    for b in blocks:
        idx = np.asarray(b, dtype=int)
        if base not in idx:
            idx = np.concatenate([[base], idx])
        idx = np.unique(idx)
        covered[idx] = True
        sub = f.cloud.subcloud(idx)
        out.append(LipFunction(sub, f.values[idx]))
    if np.any(~covered & (f.values != 0)):
        raise InputError("blocks do not cover the support of f")
    return out


# ----------------------------------------------------------------- tower


@dataclass(frozen=True, eq=False)
class TowerRestriction:
    components: list
    norms: np.ndarray
    running_max: np.ndarray
    singleton: np.ndarray


def tower_restrict(f: LipFunction, tower, bases) -> TowerRestriction:
    """Components f|M_n - f(0_n) with M_n = ``tower[n]`` and 0_n = ``bases[n]``
    (indices into ``f.cloud``)."""
    if len(tower) == 0:
        raise InputError("tower is empty")
    if len(bases) != len(tower):
        raise InputError("one base point per tower element is required")
    cloud = f.cloud
    d0 = cloud.dist[cloud.base_index, np.asarray(bases, dtype=int)]
    if np.any(np.diff(d0) > _REL * max(1.0, float(d0.max()))):
        raise InputError("tower base points must approach the base point (d(0_n, 0) non-increasing)")
    comps, norms, single = [], [], []
    for idx, b in zip(tower, bases):
        idx = np.asarray(idx, dtype=int)
        hits = np.flatnonzero(idx == int(b))
        if hits.size == 0:
            raise InputError(f"tower base point {b} not in its tower element")
        sub = cloud.subcloud(idx, base_index=int(hits[0]))
        g = LipFunction(sub, f.values[idx] - f.values[int(b)])
        comps.append(g)
        single.append(len(sub) < 2)
        norms.append(0.0 if len(sub) < 2 else lip_norm(g))
    norms = np.array(norms)
    return TowerRestriction(comps, norms, np.maximum.accumulate(norms), np.array(single))


@dataclass(frozen=True, eq=False)
class TowerLimit:
    function: LipFunction
    error_bound: float
    used: list


def tower_limit(components, target: PointCloud, mode="last", k=1, f_norm=None) -> TowerLimit:
    """Rebuild a function on ``target`` from tower components.

    Each used component is McShane-extended to ``target`` at its own norm and
    rebased to vanish at the target's base point. ``mode="last"`` uses the
    final component; ``mode="cesaro"`` averages the final ``k``.

    ``error_bound`` bounds the sup distance to f when the components came
    from ``tower_restrict(f)``: (norm + ||f||) * (covering radius of M_N in M
    plus d(0, M_N)), with ||f|| = ``f_norm`` (defaults to the component norm,
    which is the isometric regime). The second term vanishes when M_N
    contains the base point.
    """
    if not components:
        raise InputError("no tower components given")
    for g in components:
        if g.cloud.parent is not target:
            raise InputError("tower components must be subclouds of the target cloud")
    if mode == "last":
        used = [len(components) - 1]
    elif mode == "cesaro":
        if k < 1:
            raise InputError("Cesaro window must be at least 1")
        used = list(range(max(0, len(components) - k), len(components)))
    else:
        raise InputError(f"unknown tower limit mode {mode!r}")
    base = target.base_index
    acc = np.zeros(len(target))
    bound = 0.0
    for n in used:
        g = components[n]
        L = lip_norm(g) if len(g.cloud) > 1 else 0.0
        F = mcshane_to_cloud(g, target, L)
        acc += F - F[base]
        near = target.dist[:, g.cloud.parent_indices].min(axis=1)
        fn = L if f_norm is None else float(f_norm)
        bound = max(bound, (L + fn) * (float(near.max()) + float(near[base])))
    acc /= len(used)
    acc[base] = 0.0
    return TowerLimit(LipFunction(target, acc), bound, used)
