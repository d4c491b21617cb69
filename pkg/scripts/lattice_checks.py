"""Exact power-lattice constants for a range of truncations and the square
lattice hole ratios against 4/n."""

import argparse

from liporos.showcase import LatticeSpec, verify_power_lattice, verify_square_lattice_nonporous


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nmax", type=int, default=12)
    ap.add_argument("--n", type=int, nargs="+", default=[5, 10, 20, 40])
    args = ap.parse_args()
    print(" N  d(x,A)+d(y,A)/d  retraction  separation")
    for N in range(2, args.nmax + 1):
        rep = verify_power_lattice(LatticeSpec.powers(2, N))
        w = [float(c.worst) for c in rep.checks]
        print(f"{N:2d}  {w[0]:16.6f}  {w[1]:10.6f}  {w[2]:10.6f}  {'ok' if rep.holds else 'FAIL'}")
    lin = verify_power_lattice(LatticeSpec.linear(1, args.nmax), require_powers=False)
    print(f"linear a_n = n, N = {args.nmax}: distance ratio {float(lin['distance_to_A'].worst):.4f} (bound 4)")
    for row in verify_square_lattice_nonporous(args.n):
        print(f"squares n = {row.n:3d}: hole ratio {row.ratio:.4f} <= {row.bound:.4f}: {row.holds}")


if __name__ == "__main__":
    main()
