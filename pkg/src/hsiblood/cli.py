"""Batch command-line front end.

    hsiblood inspect cube.hdr
    hsiblood preprocess --image cube.hdr --output clean.hdr
    hsiblood detect --image cube.hdr --mask cube_mask.csv --scenario ideal-mf --output-dir out
    hsiblood detect --table3 /data/blood --library lib.csv --output-dir out
    hsiblood evaluate --scores out/cube_ideal-mf_scores.hdr --mask cube_mask.csv
    hsiblood sweep-n --image cube.hdr --mask m.csv --library lib.csv --library-index 20 --n-values 750,1000,10%
    hsiblood sweep-t --scene scene.cfg --t-values 200,1000,5000,20000 --n-rule 1000 --n-rule 50%
    hsiblood synth --scene scene.cfg --output-dir out
    hsiblood report --run-dir out --name cube

Exit codes: 0 ok, 2 configuration, 3 data, 4 numeric degeneracy.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import dataset
from .core import HyperCube, Spectrum
from .cube_io import (LibraryEntry, SpectralLibrary, read_annotation, read_envi, read_header,
                      read_spectral_library, write_annotation, write_envi, write_spectral_library)
from .detect import (LabeledImage, Scenario, ScenarioKind, class_template, library_template, read_config,
                     run_scenario, scenario_from_config)
from .errors import ConfigError, DataError, HsiBloodError, MissingInput
from .evaluate import (Compare, binary_truth, compare_map, confusion_at_threshold, detection_map, pr_curve,
                       prevalence, roc_curve, threshold_at_prevalence)
from .preprocess import BandMask, default_band_mask, prepare, reflectance_correct_cube, resample_spectrum
from .render import (COMPARE_PALETTE, OUTCOME_PALETTE, plot_curves_svg, read_curve_csv, read_score_map,
                     write_curve_csv, write_palette_png, write_score_map)
from .synth import NRule, generate_scene, scene_spec_from_config, sweep_n, sweep_target_size

METRIC_FIELDS = ("image", "scenario", "class_id", "n_pixels", "uncertain", "mask", "prevalence", "eta",
                 "auc_pr", "auc_roc", "tp", "fp", "tn", "fn")


@contextlib.contextmanager
def step(name: str):
    """Tag any package error raised inside the block with the operation name."""
    try:
        yield
    except HsiBloodError as exc:
        if not hasattr(exc, "operation"):
            exc.operation = name
        raise


def _existing(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{what} {p} does not exist")
    return p


def _band_mask(text: str | None, bands: int) -> BandMask:
    if text is None or text.strip().lower() == "auto":
        return default_band_mask(bands)
    return BandMask.parse(text)


def _load_cube(path, band_mask: str | None, normalize: bool) -> HyperCube:
    with step("cube_io.read_envi"):
        cube = read_envi(_existing(path, "image"))
    with step("preprocess.prepare"):
        return prepare(cube, _band_mask(band_mask, cube.bands), normalize)


def _load_image(path, mask_path, band_mask, normalize, name=None) -> LabeledImage:
    raw = read_envi(_existing(path, "image"))
    mask = None
    if mask_path:
        with step("cube_io.read_annotation"):
            mask = read_annotation(_existing(mask_path, "mask"), raw.shape[:2])
    with step("preprocess.prepare"):
        cube = prepare(raw, _band_mask(band_mask, raw.bands), normalize)
    return LabeledImage(cube, mask, name or Path(path).stem)


def _prevalence_arg(text) -> float | None:
    if text is None or str(text).strip().lower() == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"prevalence must be 'auto' or a number, got {text!r}") from None


def _write_rows(path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _evaluate_scores(scores: np.ndarray, mask, class_id: int, uncertain: str, prev_override: float | None):
    truth, valid = binary_truth(mask, class_id, uncertain)
    with step("evaluate.pr_curve"):
        pr = pr_curve(scores, truth, valid)
    with step("evaluate.roc_curve"):
        roc = roc_curve(scores, truth, valid)
    prev = prevalence(truth, valid) if prev_override is None else prev_override
    with step("evaluate.threshold_at_prevalence"):
        eta = threshold_at_prevalence(scores, prev, valid)
    cm = confusion_at_threshold(scores, truth, eta, valid)
    outcome = detection_map(scores, truth, eta, valid)
    return pr, roc, prev, eta, cm, outcome


def _write_evaluation(out_dir: Path, stem: str, row: dict, scores, mask, class_id, uncertain, prev_override):
    pr, roc, prev, eta, cm, outcome = _evaluate_scores(scores, mask, class_id, uncertain, prev_override)
    write_curve_csv(out_dir / f"{stem}_pr.csv", pr)
    write_curve_csv(out_dir / f"{stem}_roc.csv", roc)
    write_palette_png(out_dir / f"{stem}_map.png", outcome, OUTCOME_PALETTE)
    row.update(prevalence=_fmt(prev), eta=repr(eta), auc_pr=_fmt(pr.auc), auc_roc=_fmt(roc.auc),
               tp=cm.tp, fp=cm.fp, tn=cm.tn, fn=cm.fn)
    _write_rows(out_dir / f"{stem}_metrics.csv", METRIC_FIELDS, [row])
    return pr, roc


# ---------------------------------------------------------------- commands


def cmd_inspect(args) -> int:
    try:
        header = read_header(_existing(args.header, "header"))
    except (HsiBloodError, OSError) as exc:
        # any failure to read the header is a usage problem here
        print(f"hsiblood inspect: cube_io.parse_envi_header failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(header.summary())
    if header.header_offset:
        print(f"header offset {header.header_offset} bytes")
    return 0


def cmd_preprocess(args) -> int:
    with step("cube_io.read_envi"):
        cube = read_envi(_existing(args.image, "image"))
    if args.panel:
        with step("preprocess.reflectance_correct"):
            panel = read_envi(_existing(args.panel, "panel"))
            lib = read_spectral_library(_existing(args.panel_reference, "panel reference"))
            ref = lib.entries[0].spectrum
            if not np.array_equal(ref.wavelengths, cube.wavelengths):
                ref, _ = resample_spectrum(ref, cube.wavelengths)
            cube = reflectance_correct_cube(cube, panel, ref)
    with step("preprocess.prepare"):
        cube = prepare(cube, _band_mask(args.band_mask, cube.bands), not args.no_normalize)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_envi(out, cube, "bsq", 4, 0)
    print(f"wrote {out} ({cube.lines}×{cube.samples}×{cube.bands})")
    return 0


_DETECT_KEYS = ("image", "mask", "scenario", "source_image", "source_mask", "library", "library_index",
                "class_id", "n_pixels", "band_mask", "uncertain", "prevalence", "output_dir", "name",
                "seed", "threads", "normalize", "include_uncertain")
_PATH_KEYS = ("image", "mask", "source_image", "source_mask", "library", "output_dir")


def _merge_config(args) -> dict:
    """Command-line flags override values from ``--config``."""
    cfg = {}
    if args.config:
        path = _existing(args.config, "config")
        raw = read_config(path)
        unknown = set(raw) - set(_DETECT_KEYS) - {"kind"}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "kind" in raw:
            raw.setdefault("scenario", raw.pop("kind"))
        for key in _PATH_KEYS:
            if raw.get(key):
                raw[key] = str((path.parent / raw[key]))
        cfg.update(raw)
    for key in _DETECT_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if "normalize" in cfg and not isinstance(cfg["normalize"], bool):
        cfg["normalize"] = str(cfg["normalize"]).lower() in ("1", "yes", "true")
    if getattr(args, "no_normalize", False):
        cfg["normalize"] = False
    return cfg


def _scenario(cfg: dict) -> Scenario:
    return scenario_from_config({
        "kind": cfg.get("scenario", "two-stage"),
        "class_id": cfg.get("class_id", 1),
        "n_pixels": cfg.get("n_pixels", 1000),
        "library_index": cfg.get("library_index"),
        "include_uncertain": cfg.get("include_uncertain", "no"),
    })


def cmd_detect(args) -> int:
    cfg = _merge_config(args)
    if args.table3:
        return _table3(args, cfg)
    if not cfg.get("image"):
        raise ConfigError("detect needs --image or an image entry in --config")
    sc = _scenario(cfg)
    band_mask, normalize = cfg.get("band_mask"), cfg.get("normalize", True)
    uncertain = cfg.get("uncertain", "exclude")
    prev = _prevalence_arg(cfg.get("prevalence"))
    out_dir = Path(cfg.get("output_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    test = _load_image(cfg["image"], cfg.get("mask"), band_mask, normalize, cfg.get("name"))
    source = None
    if cfg.get("source_image"):
        source = _load_image(cfg["source_image"], cfg.get("source_mask"), band_mask, normalize)
    library = None
    if cfg.get("library"):
        with step("cube_io.read_spectral_library"):
            library = read_spectral_library(_existing(cfg["library"], "library"))
    with step(f"detect.{sc.kind.value}"):
        # evaluate what is stored, so ``evaluate`` on the saved map agrees
        scores = run_scenario(sc, test, source, library).scores.astype(np.float32).astype(np.float64)

    stem = f"{test.name}_{sc.kind.value}"
    write_score_map(out_dir / f"{stem}_scores.hdr", scores, f"{sc.kind.value} scores for {test.name}")
    if test.mask is None:
        print(f"{test.name} {sc.kind.value} scores written (no mask, no evaluation)")
        return 0
    n_text = f"{sc.n_percent:g}%" if sc.n_percent is not None else str(sc.n_pixels)
    row = {"image": test.name, "scenario": sc.kind.value, "class_id": sc.class_id,
           "n_pixels": n_text if sc.kind == ScenarioKind.TWO_STAGE else "",
           "uncertain": uncertain, "mask": str(Path(cfg["mask"]).resolve())}
    pr, roc = _write_evaluation(out_dir, stem, row, scores, test.mask, sc.class_id, uncertain, prev)
    print(f"{test.name} {sc.kind.value} AUC_PR={pr.auc:.2f} AUC_ROC={roc.auc:.2f}")
    return 0


def _table3(args, cfg) -> int:
    """Four scenarios over the 14 dataset images, in the published column layout."""
    root = _existing(args.table3, "dataset root")
    library = None
    if cfg.get("library"):
        with step("cube_io.read_spectral_library"):
            library = read_spectral_library(_existing(cfg["library"], "library"))
    band_mask = cfg.get("band_mask")
    normalize = cfg.get("normalize", True)
    uncertain = cfg.get("uncertain", "exclude")
    n_text = str(cfg.get("n_pixels", 1000))
    out_dir = Path(cfg.get("output_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    cache: dict = {}

    def load(code):
        if code not in cache:
            bm = None if band_mask in (None, "auto") else BandMask.parse(band_mask)
            with step(f"dataset.load_image {code}"):
                cache[code] = dataset.load_image(root, code, bm, normalize)
        return cache[code]

    codes = [c.strip() for c in args.codes.split(",")] if args.codes else [i.code for i in dataset.ROSTER]
    rows = []
    for code in codes:
        info = dataset.BY_CODE.get(code)
        if info is None:
            raise ConfigError(f"unknown image code {code!r}")
        test, source = load(code), load(info.target_source)
        truth, valid = binary_truth(test.mask, 1, uncertain)
        auc = {}
        plan = [("Ideal MF", Scenario("ideal-mf"), None, None),
                ("Inductive MF", Scenario("inductive-mf"), source, None)]
        if library is not None:
            plan.append(("MF_lib", Scenario("library-mf", library_index=info.library_index), None, library))
        two = scenario_from_config({"kind": "two-stage", "n_pixels": n_text, "library_index": info.library_index})
        plan.append(("Algorithm 1", two, None if library is not None else source, library))
        for column, sc, src, lib in plan:
            with step(f"detect.{sc.kind.value} {code}"):
                scores = run_scenario(sc, test, src, lib).scores
            auc[column] = pr_curve(scores, truth, valid).auc
        rows.append({"Code": code, **{k: f"{v:.2f}" for k, v in auc.items()}})
        print(code, " ".join(f"{k}={v:.2f}" for k, v in auc.items()))
    _write_rows(out_dir / "table3.csv", dataset.TABLE3_COLUMNS, [{k: r.get(k, "") for k in dataset.TABLE3_COLUMNS}
                                                                for r in rows])
    return 0


def cmd_evaluate(args) -> int:
    with step("render.read_score_map"):
        scores = read_score_map(_existing(args.scores, "scores"))
    with step("cube_io.read_annotation"):
        mask = read_annotation(_existing(args.mask, "mask"), scores.shape)
    out_dir = Path(args.output_dir or Path(args.scores).parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.name or Path(args.scores).stem.removesuffix("_scores")
    row = {"image": stem, "scenario": "", "class_id": args.class_id, "n_pixels": "",
           "uncertain": args.uncertain, "mask": str(Path(args.mask).resolve())}
    pr, roc = _write_evaluation(out_dir, stem, row, scores, mask, args.class_id, args.uncertain,
                                _prevalence_arg(args.prevalence))
    print(f"{stem} AUC_PR={pr.auc:.2f} AUC_ROC={roc.auc:.2f}")
    return 0


def _scene_spec(args):
    cfg = {}
    if args.scene:
        cfg.update(read_config(_existing(args.scene, "scene config")))
    for key in ("lines", "samples", "bands", "targets", "alpha", "perturbation", "seed", "components",
                "background_scale", "target_scale", "confuser_weight"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return scene_spec_from_config(cfg)


def cmd_sweep_n(args) -> int:
    n_values = [v.strip() for v in args.n_values.split(",") if v.strip()]
    if not n_values:
        raise ConfigError("--n-values is empty")
    if args.image:
        image = _load_image(args.image, args.mask, args.band_mask, not args.no_normalize)
        if image.mask is None:
            raise ConfigError("sweep-n needs --mask for evaluation")
        if args.source_image:
            source = _load_image(args.source_image, args.source_mask, args.band_mask, not args.no_normalize)
            with step("detect.class_template"):
                template = class_template(source)
        elif args.library:
            with step("detect.library_template"):
                lib = read_spectral_library(_existing(args.library, "library"))
                if args.library_index is None:
                    raise ConfigError("--library needs --library-index")
                template = library_template(lib, args.library_index, image.cube.wavelengths)
        else:
            raise ConfigError("sweep-n on an image needs --source-image or --library")
    else:
        with step("synth.generate_scene"):
            scene = generate_scene(_scene_spec(args))
        image, template = scene.labeled(), scene.detector_template
    with step("synth.sweep_n"):
        rows = sweep_n(image, template, n_values, args.class_id, args.uncertain)
    for r in rows:
        r["auc_pr"] = _fmt(r["auc_pr"])
        print(f"N={r['n_rule']} ({r['N']} px) AUC_PR={float(r['auc_pr']):.2f}")
    _output_parent(args.output)
    _write_rows(args.output, ("n_rule", "N", "auc_pr"), rows)
    return 0


def _output_parent(path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def cmd_sweep_t(args) -> int:
    t_values = [int(v) for v in args.t_values.split(",") if v.strip()]
    rules = [NRule.parse(r) for r in (args.n_rule or ["1000"])]
    spec = _scene_spec(args)
    if args.targets is None and not args.scene:
        spec.n_targets = max(t_values)
    with step("synth.generate_scene"):
        scene = generate_scene(spec)
    rows = []
    for rule in rules:
        with step("synth.sweep_target_size"):
            result = sweep_target_size(spec, t_values, rule, args.repeats, scene)
        for r in result:
            row = {"n_rule": r["n_rule"], "T": r["T"], "N": r["N"], "auc_pr_mean": _fmt(r["auc_pr_mean"]),
                   "auc_pr_sd": _fmt(r["auc_pr_sd"])}
            row.update({f"run_{i + 1}": _fmt(v) for i, v in enumerate(r["auc_pr_runs"])})
            rows.append(row)
            print(f"N={r['n_rule']} T={r['T']} AUC_PR={r['auc_pr_mean']:.3f}±{r['auc_pr_sd']:.3f}")
    fields = ["n_rule", "T", "N", "auc_pr_mean", "auc_pr_sd"] + [f"run_{i + 1}" for i in range(args.repeats)]
    _output_parent(args.output)
    _write_rows(args.output, fields, rows)
    return 0


def cmd_synth(args) -> int:
    spec = _scene_spec(args)
    with step("synth.generate_scene"):
        scene = generate_scene(spec)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_envi(out / f"{args.name}.hdr", scene.cube, "bsq", 4, 0)
    write_annotation(out / f"{args.name}_mask.csv", scene.mask)
    lib = SpectralLibrary([
        LibraryEntry(1, "true", scene.true_template),
        LibraryEntry(2, "detector", Spectrum(scene.detector_template.values, scene.detector_template.wavelengths)),
    ])
    write_spectral_library(out / f"{args.name}_templates.csv", lib)
    print(f"wrote {args.name}: {spec.lines}×{spec.samples}×{spec.bands}, {spec.n_targets} target pixels")
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        raise MissingInput(f"run directory {run_dir} does not exist")
    out_dir = Path(args.output_dir or run_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = f"{args.name}_"
    scenarios = sorted(p.name[len(prefix):-len("_pr.csv")] for p in run_dir.glob(f"{prefix}*_pr.csv")
                       if (run_dir / p.name.replace("_pr.csv", "_roc.csv")).is_file())
    scenarios = [s for s in scenarios if s in {k.value for k in ScenarioKind}]
    if not scenarios:
        raise MissingInput(f"no detection outputs for {args.name!r} in {run_dir}")
    for sc in scenarios:
        for kind in ("pr", "roc"):
            curve = read_curve_csv(run_dir / f"{prefix}{sc}_{kind}.csv", kind)
            plot_curves_svg(out_dir / f"{prefix}{sc}_{kind}.svg", {sc: curve}, kind)

    ideal = ScenarioKind.IDEAL_MF.value
    realistic = [s for s in (ScenarioKind.TWO_STAGE.value, ScenarioKind.LIBRARY_MF.value,
                             ScenarioKind.INDUCTIVE_MF.value) if s in scenarios]
    if ideal not in scenarios:
        raise MissingInput(f"compare map needs an {ideal} run for {args.name!r}")
    if not realistic:
        raise MissingInput(f"compare map needs a two-stage, library-mf or inductive-mf run for {args.name!r}")
    a_name = realistic[0]
    maps = {}
    for sc in (a_name, ideal):
        hdr = run_dir / f"{prefix}{sc}_scores.hdr"
        if not hdr.is_file():
            raise MissingInput(f"missing score map {hdr}")
        maps[sc] = read_score_map(hdr)
    with open(run_dir / f"{prefix}{a_name}_metrics.csv", newline="") as fh:
        meta = next(csv.DictReader(fh))
    mask_path = Path(meta["mask"])
    if not mask_path.is_file():
        raise MissingInput(f"annotation {mask_path} recorded by the run is missing")
    mask = read_annotation(mask_path, maps[a_name].shape)
    truth, valid = binary_truth(mask, int(meta["class_id"]), meta["uncertain"])
    with step("evaluate.compare_map"):
        codes = compare_map(maps[a_name], maps[ideal], truth, None, valid)
    write_palette_png(out_dir / f"{prefix}compare.png", codes, COMPARE_PALETTE)
    counts = ", ".join(f"{c.name.lower()}={int(np.count_nonzero(codes == c))}" for c in Compare if c)
    print(f"{args.name}: {len(scenarios)} scenario(s), compare {a_name} vs {ideal}: {counts}")
    return 0


# ---------------------------------------------------------------- parser


def _add_image_flags(p, mask=True):
    p.add_argument("--image")
    if mask:
        p.add_argument("--mask")
    p.add_argument("--band-mask", default=None, help='"auto", "none" or e.g. "0-4,48-50,121-127"')
    p.add_argument("--no-normalize", action="store_true")


def _add_scene_flags(p):
    p.add_argument("--scene", help="scene config file (key = value lines)")
    for flag, typ in (("lines", int), ("samples", int), ("bands", int), ("targets", int), ("alpha", float),
                      ("perturbation", float), ("components", int), ("background-scale", float),
                      ("target-scale", float), ("confuser-weight", float)):
        p.add_argument(f"--{flag}", type=typ)
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hsiblood", description="Blood detection in hyperspectral images.",
                                 allow_abbrev=False)
    ap.add_argument("--threads", type=int, default=None, help="BLAS thread count")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print an ENVI header summary", allow_abbrev=False)
    p.add_argument("header")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("preprocess", help="band removal, normalization, panel correction", allow_abbrev=False)
    _add_image_flags(p, mask=False)
    p.add_argument("--panel")
    p.add_argument("--panel-reference", help="library CSV whose first entry is the panel reference")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("detect", help="run one detection scenario", allow_abbrev=False)
    p.add_argument("--config")
    p.add_argument("--image")
    p.add_argument("--mask")
    p.add_argument("--band-mask", default=None)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--scenario", choices=[k.value for k in ScenarioKind])
    p.add_argument("--source-image")
    p.add_argument("--source-mask")
    p.add_argument("--library")
    p.add_argument("--library-index", type=int)
    p.add_argument("--class-id", type=int)
    p.add_argument("--n-pixels", help="pixel count or percent of the class, e.g. 1000 or 10%%")
    p.add_argument("--uncertain", choices=["exclude", "positive", "negative"])
    p.add_argument("--prevalence", help="'auto' (true class fraction) or a number")
    p.add_argument("--output-dir")
    p.add_argument("--name")
    p.add_argument("--seed", type=int)
    p.add_argument("--table3", metavar="DATASET_ROOT", help="run all dataset images and write table3.csv")
    p.add_argument("--codes", help="comma-separated subset of image codes for --table3")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="curves and metrics for a stored score map", allow_abbrev=False)
    p.add_argument("--scores", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--class-id", type=int, default=1)
    p.add_argument("--uncertain", choices=["exclude", "positive", "negative"], default="exclude")
    p.add_argument("--prevalence", default="auto")
    p.add_argument("--output-dir")
    p.add_argument("--name")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep-n", help="two-stage AUC(PR) against N", allow_abbrev=False)
    _add_image_flags(p)
    _add_scene_flags(p)
    p.add_argument("--source-image")
    p.add_argument("--source-mask")
    p.add_argument("--library")
    p.add_argument("--library-index", type=int)
    p.add_argument("--class-id", type=int, default=1)
    p.add_argument("--uncertain", choices=["exclude", "positive", "negative"], default="exclude")
    p.add_argument("--n-values", default="750,1000,10%,20%")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sweep_n)

    p = sub.add_parser("sweep-t", help="two-stage AUC(PR) against the target pixel count", allow_abbrev=False)
    _add_scene_flags(p)
    p.add_argument("--t-values", default="200,1000,5000,20000")
    p.add_argument("--n-rule", action="append", help="constant (1000) or percent of T (50%%); repeatable")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_sweep_t)

    p = sub.add_parser("synth", help="write a synthetic scene", allow_abbrev=False)
    _add_scene_flags(p)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--name", default="scene")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="SVG curves and the comparison map", allow_abbrev=False)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    limits = threadpool_limits(limits=args.threads) if args.threads else contextlib.nullcontext()
    try:
        with limits:
            return args.func(args)
    except HsiBloodError as exc:
        op = getattr(exc, "operation", args.command)
        print(f"hsiblood {args.command}: {op} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"hsiblood {args.command}: I/O failed: {DataError.__name__}: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
