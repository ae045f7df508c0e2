"""Two-stage PR AUC against the number of target pixels T.

Compares a constant N with N proportional to T on a 200x200 scene and
optionally saves a plot.

    python scripts/target_size_sweep.py --seeds 3 --plot sweep.png
"""
import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from hsiblood.synth import default_scene_spec, generate_scene, sweep_target_size  # noqa: E402

# narrow background, broad target spread, strong red confuser
SCENE = dict(lines=200, samples=200, bands=16, n_targets=20000, mixing_alpha=1.0, template_perturbation=0.03,
             background_scale=0.012, target_scale=0.055, confuser_weight=0.15, confuser_shift=10.0,
             band_correlation=0.5, n_components=3)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, default=1)
    ap.add_argument("--t-values", default="200,1000,2000,5000,10000,20000")
    ap.add_argument("--rules", default="1000,50%")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--plot")
    args = ap.parse_args()
    t_values = [int(t) for t in args.t_values.split(",")]
    rules = args.rules.split(",")

    fig, ax = plt.subplots(figsize=(6, 4))
    for seed in range(args.seeds):
        spec = default_scene_spec(seed=seed, **SCENE)
        scene = generate_scene(spec)
        for rule in rules:
            rows = sweep_target_size(spec, t_values, rule, args.repeats, scene)
            curve = [r["auc_pr_mean"] for r in rows]
            print(f"seed={seed} N={rule:>6}: " + " ".join(f"T={t}:{a:.3f}" for t, a in zip(t_values, curve)))
            ax.plot(t_values, curve, marker="o", label=f"N={rule} seed {seed}")
    if args.plot:
        ax.set_xscale("log")
        ax.set_xlabel("target pixels T")
        ax.set_ylabel("AUC(PR)")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(args.plot, dpi=120)


if __name__ == "__main__":
    main()
