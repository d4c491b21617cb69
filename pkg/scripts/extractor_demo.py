"""Run the well-separated extractor on both synthetic regimes and print the trace."""

import json

from liporos.extraction import extract_well_separated
from liporos.suite import extractor_regimes


def main():
    for name, cloud, cands, x0, target in extractor_regimes():
        ex = extract_well_separated(cloud, cands, x0=x0)
        print(f"{name}: {len(cands)} candidates -> {len(ex.balls)} balls, "
              f"lambda = {ex.certificate.lam:.6f} (target {target})")
        for e in ex.trace:
            print("  " + json.dumps({k: e[k] for k in ("step", "paper_case", "indices")}))


if __name__ == "__main__":
    main()
