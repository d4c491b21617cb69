"""Porosity profiles of the deterministic fixtures: a unit net, the square
lattice and the Cantor dust. Prints one line per scale."""

import argparse

from liporos.showcase import CantorDustSpec, LatticeSpec, NetSpec, build_lattice, build_test_set
from liporos.porosity import porosity_profile


def fixtures():
    yield "net (step 1, l_inf)", build_test_set(NetSpec(1.0), box=([0, 0], [256, 256])), [2.0, 8.0, 32.0]
    cloud, _ = build_lattice(LatticeSpec.squares(30))
    yield "squares (N = 30, l_inf)", cloud, [16.0, 64.0, 256.0]
    yield "dust (1/4, depth 6)", build_test_set(CantorDustSpec(0.25, 6)), [4.0 ** -k for k in (4, 3, 2)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--probes", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name, cloud, scales in fixtures():
        rep = porosity_profile(cloud, scales, args.probes, args.seed)
        print(name)
        for r, lam in zip(rep.scales, rep.lambda_hat):
            print(f"  r = {r:<10.4g} lambda_hat = {lam:.4f}")


if __name__ == "__main__":
    main()
