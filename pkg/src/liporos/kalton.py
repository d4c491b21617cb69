"""Dyadic annular decomposition of molecules.

Lambda_n is the tent in t = d(x, 0) supported on [2^(n-1), 2^(n+1)] with
peak 1 at 2^n; the tents form a partition of unity on t > 0 with at most
two non-zero terms. W_n multiplies a molecule's weights by Lambda_n, and
the layer norms are known to satisfy sum_n ||W_n mu|| <= 45 ||mu||.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BoundViolation
from .kr import Molecule, kr_norm

KALTON_CONSTANT = 45.0


def weight_of_distance(n: int, t: float) -> float:
    """Lambda_n as a function of t = d(x, 0)."""
    lo, mid, hi = math.ldexp(1.0, n - 1), math.ldexp(1.0, n), math.ldexp(1.0, n + 1)
    if lo <= t <= mid:
        return math.ldexp(t, -(n - 1)) - 1.0
    if mid <= t <= hi:
        return 2.0 - math.ldexp(t, -n)
    return 0.0


def kalton_weight(n: int, x, space) -> float:
    return weight_of_distance(n, space.distance(x, space.base_point))


def active_layers(t: float):
    """The (at most two) layers with Lambda_n(t) != 0, as [(n, Lambda_n(t))].

    With t = s * 2^m, s in [1, 2): Lambda_m = 2 - s and Lambda_{m+1} = s - 1,
    both exact in floating point, so their sum is exactly 1.
    """
    if t <= 0:
        return []
    mant, exp = math.frexp(t)
    m = exp - 1
    s = math.ldexp(t, -m)
    out = [(m, 2.0 - s)]
    if s > 1.0:
        out.append((m + 1, s - 1.0))
    return out


def split_weight(a: float, lam_lo: float, lam_hi: float):
    """Split weight a into (a * lam_lo, a * lam_hi) so the parts sum to a exactly.

    The larger share is multiplied out; the other is the exact remainder
    (Sterbenz: the product lies in [a/2, a] since that share is >= 1/2).
    """
    if lam_lo >= lam_hi:
        big = a * lam_lo
        return big, a - big
    big = a * lam_hi
    return a - big, big


@dataclass(frozen=True, eq=False)
class KaltonLayer:
    n: int
    molecule: Molecule
    kr_norm: float

    @property
    def annulus(self):
        return math.ldexp(1.0, self.n - 1), math.ldexp(1.0, self.n + 1)


@dataclass(frozen=True, eq=False)
class Decomposition:
    layers: list
    total_norm: float
    layer_norm_sum: float

    @property
    def ratio(self) -> float:
        return self.layer_norm_sum / self.total_norm if self.total_norm > 0 else 0.0


def decompose_weights(mu: Molecule):
    """{n: {point index: weight}} with every support weight split across its layers."""
    cloud = mu.cloud
    dist0 = cloud.dist[cloud.base_index]
    layers = {}
    for i, a in zip(mu.indices, mu.weights):
        act = active_layers(float(dist0[i]))
        if len(act) == 1:
            parts = [(act[0][0], a)]
        else:
            (n0, l0), (n1, l1) = act
            w0, w1 = split_weight(float(a), l0, l1)
            parts = [(n0, w0), (n1, w1)]
        for n, w in parts:
            if w != 0.0:
                layers.setdefault(n, {})[int(i)] = w
    return layers


def kalton_decompose(mu: Molecule, bound=KALTON_CONSTANT, check=True) -> Decomposition:
    if mu.is_zero():
        return Decomposition([], 0.0, 0.0)
    total = kr_norm(mu)
    layers = []
    for n, pts in sorted(decompose_weights(mu).items()):
        idx = sorted(pts)
        layer_mu = Molecule(mu.cloud, idx, [pts[i] for i in idx])
        layers.append(KaltonLayer(n, layer_mu, kr_norm(layer_mu)))
    s = float(sum(layer.kr_norm for layer in layers))
    dec = Decomposition(layers, total, s)
    if check and s > bound * total:
        raise BoundViolation(f"layer norms sum to {dec.ratio:.6g} x ||mu||, above {bound:g}")
    return dec


def reconstruct(layers, cloud) -> Molecule:
    """Sum of layer molecules, accumulated point by point."""
    acc = {}
    for layer in layers:
        for i, w in zip(layer.molecule.indices, layer.molecule.weights):
            acc[int(i)] = acc.get(int(i), 0.0) + float(w)
    keys = sorted(acc)
    return Molecule(cloud, keys, [acc[k] for k in keys])
