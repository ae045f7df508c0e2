"""Four detection scenarios over the 14 dataset images, next to the published values.

    python scripts/table3.py --data /data/blood --library lib.csv
"""
import argparse

from hsiblood import dataset
from hsiblood.cube_io import read_spectral_library
from hsiblood.detect import Scenario, run_scenario
from hsiblood.evaluate import binary_truth, pr_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--data", required=True)
    ap.add_argument("--library", required=True)
    ap.add_argument("--n-pixels", type=int, default=1000)
    args = ap.parse_args()
    library = read_spectral_library(args.library)
    cache = {}

    def load(code):
        if code not in cache:
            cache[code] = dataset.load_image(args.data, code)
        return cache[code]

    print(f"{'code':7s}" + "".join(f"{c:>22s}" for c in dataset.TABLE3_COLUMNS[1:]))
    for info in dataset.ROSTER:
        test, source = load(info.code), load(info.target_source)
        truth, valid = binary_truth(test.mask)
        runs = [
            run_scenario(Scenario("ideal-mf"), test),
            run_scenario(Scenario("inductive-mf"), test, source),
            run_scenario(Scenario("library-mf", library_index=info.library_index), test, library=library),
            run_scenario(Scenario("two-stage", n_pixels=args.n_pixels, library_index=info.library_index), test,
                         library=library),
        ]
        cells = [f"{pr_curve(r.scores, truth, valid).auc:.2f} ({ref:.2f})"
                 for r, ref in zip(runs, dataset.TABLE3[info.code])]
        print(f"{info.code:7s}" + "".join(f"{c:>22s}" for c in cells))


if __name__ == "__main__":
    main()
