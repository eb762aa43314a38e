import argparse
import logging
import sys

import numpy as np

from boxcoxseg.models import experiment, segmentation, sweep
from boxcoxseg.models.image import LabelMask, Palette, vectorize
from boxcoxseg.models.metrics import MetricReport, confusion
from boxcoxseg.models.run_config import RunConfigBuilder
from boxcoxseg.utils import likelihood, pipeline, prefilter, raster, synthetic
from boxcoxseg.utils.config import get_default_run_config
from boxcoxseg.utils.errors import ExitStatus, exit_status_for


def _range(text: str) -> tuple:
    parsed = prefilter.StretchRange.from_string(text)
    return parsed.g_min, parsed.g_max


def _size(text: str) -> tuple:
    try:
        height, width = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("size {0} is not written as HEIGHTxWIDTH".format(text))
    return height, width


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off, got {0}".format(text))
    return text == "on"


def _classifier_list(text: str) -> list:
    return [part.strip() for part in text.split(",") if part.strip()]


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="JSON run config overriding the packaged defaults")
    parser.add_argument("--log-level", default="WARNING", help="logging level, WARNING by default")
    parser.add_argument("--seed", type=int, help="seed of every random choice")
    parser.add_argument("--workers", type=int, help="threads used for independent work items")


def _add_prefilter(parser: argparse.ArgumentParser):
    parser.add_argument("--lambda", dest="lambda", help="a fixed lambda or mle to estimate it")
    parser.add_argument("--shift", type=float, help="constant c added before the transform")
    parser.add_argument("--range", dest="stretch_range", type=_range, help="stretch target lo:hi")
    parser.add_argument("--bracket-lo", type=float, help="lower end of the lambda search")
    parser.add_argument("--bracket-hi", type=float, help="upper end of the lambda search")
    parser.add_argument("--grid-points", type=int, help="coarse grid points of the lambda search")
    parser.add_argument("--full-data", action="store_const", const=True,
                        help="estimate lambda on every pixel even for very large images")


def _add_classifier(parser: argparse.ArgumentParser):
    parser.add_argument("--mask", required=True, help="ground truth mask")
    parser.add_argument("--palette", help="mask palette, e.g. 0=background;255=crack")
    parser.add_argument("--classifier", help="LDA, QDA, KNN or SVM")
    parser.add_argument("--featurizer", help="intensity or window")
    parser.add_argument("--window", type=int, help="odd window size of the window featurizer")
    parser.add_argument("--ridge", type=float, help="covariance ridge of LDA and QDA")
    parser.add_argument("--k", dest="k_neighbors", type=int, help="neighbours of K-NN")
    parser.add_argument("--svm-mode", help="linear or kernel")
    parser.add_argument("--svm-c", type=float, help="box constraint of the kernel SVM")
    parser.add_argument("--kernel", help="linear, polynomial, rbf or sigmoid")
    parser.add_argument("--kernel-gamma", type=float, help="kernel gamma, 1/d when omitted")
    parser.add_argument("--kernel-coef0", type=float, help="kernel r")
    parser.add_argument("--kernel-degree", type=int, help="polynomial kernel degree")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boxcox-seg",
                                     description="Box-Cox prefiltering and pixel segmentation experiments")
    subparsers = parser.add_subparsers(dest="command", required=True)

    transform = subparsers.add_parser("transform", help="prefilter an image")
    transform.add_argument("--input", required=True)
    transform.add_argument("--output", required=True)
    transform.add_argument("--method", help="boxcox or gamma")
    transform.add_argument("--gain", type=float, help="gain c of the gamma method")
    transform.add_argument("--gamma", type=float, help="exponent of the gamma method")
    transform.add_argument("--trace", help="also write the likelihood grid trace CSV here")
    _add_prefilter(transform)
    _add_common(transform)

    estimate = subparsers.add_parser("estimate-lambda", help="maximum likelihood lambda of an image")
    estimate.add_argument("--input", required=True)
    estimate.add_argument("--output", required=True, help="grid trace CSV")
    _add_prefilter(estimate)
    _add_common(estimate)

    segment = subparsers.add_parser("segment", help="train on a holdout split and segment the image")
    segment.add_argument("--input", required=True)
    segment.add_argument("--output", required=True, help="predicted mask")
    segment.add_argument("--prefilter", type=_on_off, help="on or off")
    segment.add_argument("--report", help="also write the full image metric CSV here")
    segment.add_argument("--model-out", help="save the fitted model as JSON")
    segment.add_argument("--model-in", help="segment with a saved model instead of training")
    _add_classifier(segment)
    _add_prefilter(segment)
    _add_common(segment)

    evaluate = subparsers.add_parser("evaluate", help="score a predicted mask against the ground truth")
    evaluate.add_argument("--prediction", required=True)
    evaluate.add_argument("--truth", required=True)
    evaluate.add_argument("--palette")
    evaluate.add_argument("--output", required=True, help="metric CSV")
    _add_common(evaluate)

    sweep_parser = subparsers.add_parser("sweep", help="segmentation quality over a lambda grid")
    sweep_parser.add_argument("--input", required=True)
    sweep_parser.add_argument("--output", required=True, help="sweep CSV")
    sweep_parser.add_argument("--sweep-lo", type=float)
    sweep_parser.add_argument("--sweep-hi", type=float)
    sweep_parser.add_argument("--sweep-points", type=int)
    sweep_parser.add_argument("--precision-average", help="macro or weighted")
    sweep_parser.add_argument("--plot-data", action="store_const", const=True,
                              help="also write a lambda,metric,value CSV")
    _add_classifier(sweep_parser)
    _add_prefilter(sweep_parser)
    _add_common(sweep_parser)

    compare = subparsers.add_parser("compare", help="every classifier before and after the prefilter")
    compare.add_argument("--input", required=True)
    compare.add_argument("--output", required=True, help="comparison CSV")
    compare.add_argument("--classifiers", type=_classifier_list, help="comma separated kinds")
    _add_classifier(compare)
    _add_prefilter(compare)
    _add_common(compare)

    synth = subparsers.add_parser("synth", help="write a synthetic oracle image")
    synth.add_argument("--kind", required=True, choices=sorted(synthetic.SUPPORTED_KINDS))
    synth.add_argument("--output", required=True)
    synth.add_argument("--mask-output", help="mask of the two-class image")
    synth.add_argument("--size", type=_size, help="HEIGHTxWIDTH, 256x256 by default")
    synth.add_argument("--lambda-star", type=float, help="true lambda of the boxcox kind, 0.5 by default")
    synth.add_argument("--mu", type=float, help="mean of the normal component")
    synth.add_argument("--sigma", type=float, help="standard deviation of the normal component")
    _add_common(synth)
    return parser


NOT_RECORDED = {"command", "config", "log_level", "stretch_range"}


def _build_config(args: argparse.Namespace):
    """Merges the flags backed by run config keys over the file and the defaults, and records the other
    arguments so the manifest can replay the run"""
    flags = vars(args)
    known = set(get_default_run_config())
    values = {key: value for key, value in flags.items() if key in known}
    if flags.get("stretch_range") is not None:
        values["stretch_min"], values["stretch_max"] = flags["stretch_range"]
    arguments = {key: value for key, value in flags.items() if key not in known and key not in NOT_RECORDED}
    return RunConfigBuilder().build_from_args(args.command, values, args.config, arguments)


def _stretch_range(config) -> prefilter.StretchRange:
    return prefilter.StretchRange(config["stretch_min"], config["stretch_max"])


def _palette(config) -> Palette:
    return Palette.from_string(config["palette"])


def cmd_transform(args, config) -> dict:
    gray = raster.load_gray(args.input)
    results = {"method": config["method"]}
    if config["method"] == "gamma":
        gamma_params = prefilter.GammaParams(config["gain"], config["gamma"])
        output = pipeline.gamma_pipeline(gray, gamma_params, _stretch_range(config))
        results["gamma"] = gamma_params.to_dict()
    else:
        lam = None if config["lambda"] == "mle" else config["lambda"]
        output, params, estimate = pipeline.prefilter_pipeline(
            gray, lam, _stretch_range(config), config["shift"], (config["bracket_lo"], config["bracket_hi"]),
            config["full_data"], config["seed"], config["workers"])
        results["boxcox"] = params.to_dict()
        if estimate is not None:
            results["estimate"] = estimate.to_dict()
            if args.trace:
                likelihood.export_trace(estimate, args.trace)
        print("lambda {0!r} shift {1!r}".format(params.lam, params.shift))
    results["stretch"] = _stretch_range(config).to_dict()
    raster.save_gray(output, args.output)
    return {"outputs": {"image": args.output, "trace": getattr(args, "trace", None)}, "results": results}


def cmd_estimate_lambda(args, config) -> dict:
    gray = raster.load_gray(args.input)
    try:
        estimate = likelihood.fit_lambda(vectorize(gray), (config["bracket_lo"], config["bracket_hi"]),
                                         shift=config["shift"], grid_points=config["grid_points"],
                                         full_data=config["full_data"], seed=config["seed"],
                                         workers=config["workers"])
    except likelihood.BracketBoundaryError as e:
        likelihood.export_trace(e.estimate, args.output)
        raise
    likelihood.export_trace(estimate, args.output)
    print("lambda_hat {0!r}".format(estimate.lambda_hat))
    print("sigma2_hat {0!r}".format(estimate.sigma2_hat))
    print("theta_hat {0}".format(" ".join(repr(float(value)) for value in estimate.theta_hat)))
    print("loglik {0!r}".format(estimate.loglik_at_max))
    return {"outputs": {"trace": args.output}, "results": {"estimate": estimate.to_dict()}}


def _condition_lambda(config):
    """None when the prefilter is off, otherwise the configured lambda or mle"""
    return config["lambda"] if config["prefilter"] else None


def cmd_segment(args, config) -> dict:
    gray = raster.load_gray(args.input)
    palette = _palette(config)
    truth = raster.load_mask(args.mask, palette)
    if gray.shape != truth.shape:
        raise ValueError("image {0} and mask {1} differ in shape".format(gray.shape, truth.shape))
    results = {}
    if args.model_in:
        model = segmentation.load_model(args.model_in)
        image, params, estimate = experiment.prepare_image(gray, _condition_lambda(config), config.payload)
        fit_seconds = None
    else:
        holdout = experiment.run_holdout(gray, truth, _condition_lambda(config), config.payload)
        model, image, params, estimate = holdout.model, holdout.image, holdout.params, holdout.estimate
        fit_seconds = holdout.fit_seconds
        print("holdout report ({0} fitted in {1:.3f}s)".format(model.kind, fit_seconds))
        print(holdout.report.format_table())
        results["holdout"] = holdout.report.to_dict()
        if args.model_out:
            segmentation.save_model(model, args.model_out)
    predicted = segmentation.segment_image(image, model, model.featurizer, config["workers"],
                                           num_classes=truth.num_classes, class_names=truth.class_names)
    raster.save_mask(predicted, palette, args.output)
    report = MetricReport(confusion(predicted, truth), truth.names())
    print("full image report")
    print(report.format_table())
    if args.report:
        report.to_csv(args.report)
    results.update({"full_image": report.to_dict(), "fit_seconds": fit_seconds, "classifier": model.kind,
                    "boxcox": None if params is None else params.to_dict(),
                    "estimate": None if estimate is None else estimate.to_dict()})
    outputs = {"mask": args.output, "report": args.report, "model_out": args.model_out, "model_in": args.model_in}
    return {"outputs": outputs, "results": results}


def cmd_evaluate(args, config) -> dict:
    palette = _palette(config)
    predicted = raster.load_mask(args.prediction, palette)
    truth = raster.load_mask(args.truth, palette)
    report = MetricReport(confusion(predicted, truth), truth.names())
    print(report.format_table())
    report.to_csv(args.output)
    return {"outputs": {"report": args.output}, "results": report.to_dict()}


def cmd_sweep(args, config) -> dict:
    gray = raster.load_gray(args.input)
    truth = raster.load_mask(args.mask, _palette(config))
    cfg = sweep.SweepConfig.from_config(config.payload)
    result = sweep.run_sweep(gray, truth, cfg, config.payload)
    sweep.export_sweep(result, args.output)
    annotations = result.annotations()
    print("argmax kappa lambda {0}".format(annotations["argmax_kappa_lambda"]))
    print("argmax precision lambda {0}".format(annotations["argmax_precision_lambda"]))
    print("mle lambda {0} ({1})".format(annotations["mle_lambda"], annotations["mle_status"]))
    outputs = {"csv": args.output, "annotations": sweep.sidecar_path(args.output, "annotations.json"),
               "timing": sweep.sidecar_path(args.output, "timing.csv"),
               "long": sweep.sidecar_path(args.output, "long.csv") if cfg.plot_data else None}
    return {"outputs": outputs, "results": annotations}


def cmd_compare(args, config) -> dict:
    gray = raster.load_gray(args.input)
    truth = raster.load_mask(args.mask, _palette(config))
    results = experiment.compare_classifiers(gray, truth, config.payload)
    experiment.export_comparison(results, args.output)
    for kind, condition, result in results:
        print("{0} {1}: accuracy {2:.4f} macro f1 {3:.4f} kappa {4} fit {5:.3f}s".format(
            kind, condition, result.report.accuracy, result.report.macro["f1"], result.report.kappa,
            result.fit_seconds))
    return {"outputs": {"csv": args.output}, "results": {"rows": experiment.comparison_rows(results)}}


def cmd_synth(args, config) -> dict:
    seed = config["seed"]
    size = tuple(config.resolve_default("size", synthetic.DEFAULT_SIZE))
    parameters = {key: config.resolve_default(key, value)
                  for key, value in synthetic.DEFAULT_PARAMETERS[args.kind].items()}
    mask = None
    if args.kind == "lognormal":
        image = synthetic.lognormal_image(size, parameters["mu"], parameters["sigma"], seed)
    elif args.kind == "boxcox":
        image = synthetic.boxcox_normal_image(size, parameters["lambda_star"], parameters["mu"],
                                              parameters["sigma"], seed)
    elif args.kind == "normal":
        image = synthetic.normal_image(size, parameters["mu"], parameters["sigma"], seed)
    else:
        image, mask = synthetic.two_class_image(size, seed=seed)
    raster.save_gray(image, args.output)
    if mask is not None:
        mask_path = config.resolve_default("mask_output", "{0}.mask.pgm".format(args.output))
        palette = Palette.from_string("0=background;255=minority")
        raster.save_mask(LabelMask(mask.labels, 2, mask.class_names), palette, mask_path)
    else:
        mask_path = None
    results = dict(parameters, kind=args.kind, size=list(size),
                   clipped_pixels=int(np.count_nonzero(np.rint(image.pixels) > 255)))
    return {"outputs": {"image": args.output, "mask": mask_path}, "results": results}


COMMANDS = {
    "transform": cmd_transform,
    "estimate-lambda": cmd_estimate_lambda,
    "segment": cmd_segment,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "synth": cmd_synth
}


def main(argv: list = None) -> int:
    """Runs one subcommand and returns its exit status: 0 success, 2 usage or I/O, 3 degenerate data,
    4 numerical failure"""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        config = _build_config(args)
        outcome = COMMANDS[args.command](args, config)
        config.write_manifest(args.output, outcome["outputs"], outcome["results"])
    except Exception as e:
        logging.critical("boxcoxseg {0} failed: {1}".format(args.command, e))
        logging.debug("boxcoxseg {0} traceback".format(args.command), exc_info=True)
        return exit_status_for(e)
    return ExitStatus.SUCCESS


if __name__ == "__main__":
    sys.exit(main())
