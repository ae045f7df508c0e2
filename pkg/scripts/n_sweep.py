"""Two-stage PR AUC against N, on dataset images or a synthetic scene.

    python scripts/n_sweep.py --data /data/blood --library lib.csv --codes "E(1),F(7)"
    python scripts/n_sweep.py --synthetic --n-values 10,50,100,250,500,1000
"""
import argparse

from hsiblood import dataset
from hsiblood.cube_io import read_spectral_library
from hsiblood.detect import library_template
from hsiblood.synth import default_scene_spec, generate_scene, sweep_n


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--data", help="dataset root")
    ap.add_argument("--library", help="spectral library CSV")
    ap.add_argument("--codes", default="E(1),F(7)")
    ap.add_argument("--synthetic", action="store_true")
    ap.add_argument("--n-values", default=",".join(dataset.TABLE5_N))
    args = ap.parse_args()
    n_values = args.n_values.split(",")

    if args.synthetic:
        scene = generate_scene(default_scene_spec(n_targets=1000, template_perturbation=0.15, confuser_weight=0.05))
        for r in sweep_n(scene.labeled(), scene.detector_template, n_values):
            print(f"N={r['n_rule']:>6} ({r['N']:5d} px)  AUC_PR={r['auc_pr']:.3f}")
        return
    if not (args.data and args.library):
        ap.error("--data and --library are required unless --synthetic is given")
    library = read_spectral_library(args.library)
    for code in args.codes.split(","):
        image = dataset.load_image(args.data, code)
        template = library_template(library, dataset.BY_CODE[code].library_index, image.cube.wavelengths)
        rows = sweep_n(image, template, n_values)
        ref = dataset.TABLE5.get(code)
        for i, r in enumerate(rows):
            published = f"  published {ref[i]:.2f}" if ref and r["n_rule"] == dataset.TABLE5_N[i] else ""
            print(f"{code} N={r['n_rule']:>6} ({r['N']:6d} px)  AUC_PR={r['auc_pr']:.3f}{published}")


if __name__ == "__main__":
    main()
