##
# File:    triplaneExec.py
# Author:  jdw
# Date:    18-Oct-2026
#
# Updates:
#
##
"""
Command line entry point for the triplane workbench.

    triplane_exec gen-data --out ./data --seed 0
    triplane_exec train-decoder --data ./data --out ./decoder
    triplane_exec fit --data ./data --decoder ./decoder/decoder.ckpt --out ./fit
    triplane_exec train-diffusion --data ./data --triplanes ./fit --out ./model
    triplane_exec sample --model ./model/diffusion.ckpt --caption "red sphere" --seed 3 --out ./samples
    triplane_exec refine --model ./model/diffusion.ckpt --decoder ./decoder/decoder.ckpt --triplane ./samples/sample-000.tpln --caption "red sphere" --out ./refined
    triplane_exec render --triplane ./fit/triplane-scene-000000.tpln --decoder ./decoder/decoder.ckpt --axis-views --pseudo-images --out ./views
    triplane_exec export-mesh --triplane ./fit/triplane-scene-000000.tpln --decoder ./decoder/decoder.ckpt --out ./mesh
    triplane_exec eval --data ./data --triplanes ./fit --decoder ./decoder/decoder.ckpt --model ./model/diffusion.ckpt --sweep-cfg 1,5 --out ./eval

Exit status: 0 success, 1 invalid arguments or inputs, 2 runtime abort.
"""

__docformat__ = "restructuredtext en"
__author__ = "John Westbrook"
__email__ = "john.westbrook@rcsb.org"
__license__ = "Apache 2.0"

import argparse
import logging
import sys

import torch

from rcsb.utils.triplane import __version__
from rcsb.utils.triplane.TriPlaneExceptions import FormatError
from rcsb.utils.triplane.TriPlaneWorkbench import TriPlaneWorkbench

logger = logging.getLogger()

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ABORT = 2


class WorkbenchArgumentParser(argparse.ArgumentParser):
    """Report usage errors with exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, "%s: error: %s\n" % (self.prog, message))


def floatList(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma separated list of numbers (got %r)" % text)


def intList(text):
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma separated list of integers (got %r)" % text)


def buildParser():
    common = WorkbenchArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="Random seed (default 0)")
    common.add_argument("--config", default=None, help="Flat key = value configuration file")
    common.add_argument("--out", default=None, help="Output directory (default TRIPLANE_CACHE_PATH or .)")
    common.add_argument("--num-threads", type=int, default=None, help="Torch intra-op threads")
    common.add_argument("--num-proc", type=int, default=None, help="Worker processes for dataset rendering and fitting")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="Warnings and errors only")
    #
    parser = WorkbenchArgumentParser(prog="triplane_exec", description="Triplane pseudo-image generation workbench")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    subparsers = parser.add_subparsers(dest="subCommand", metavar="subcommand")
    subparsers.required = True
    #
    sp = subparsers.add_parser("gen-data", parents=[common], help="Render the procedural scene dataset")
    sp.add_argument("--n-scenes", type=int, default=None, help="Number of scenes (default 200)")
    sp.add_argument("--views", type=int, default=None, help="Views per scene (default 64)")
    sp.add_argument("--resolution", type=int, default=None, help="View resolution (default 128)")
    #
    sp = subparsers.add_parser("train-decoder", parents=[common], help="Train the shared decoder on a subset of objects")
    sp.add_argument("--data", required=True, help="gen-data output directory")
    sp.add_argument("--objects", type=int, default=None, help="Number of objects (default 32)")
    sp.add_argument("--steps", type=int, default=None, help="Optimization steps (default 4000)")
    #
    sp = subparsers.add_parser("fit", parents=[common], help="Fit one triplane per scene against the frozen decoder")
    sp.add_argument("--data", required=True, help="gen-data output directory")
    sp.add_argument("--decoder", required=True, help="Decoder checkpoint")
    sp.add_argument("--indices", type=intList, default=None, help="Scene indices (default all)")
    sp.add_argument("--steps", type=int, default=None, help="Optimization steps per object (default 2000)")
    sp.add_argument("--lambda-depth", type=float, default=None, help="Depth loss coefficient (default 0.5)")
    #
    sp = subparsers.add_parser("train-diffusion", parents=[common], help="Train the pseudo-image diffusion model")
    sp.add_argument("--data", default=None, help="gen-data output directory (single-image corpus)")
    sp.add_argument("--triplanes", required=True, help="fit output directory")
    sp.add_argument("--steps", type=int, default=None, help="Training steps (default 20000)")
    sp.add_argument("--p2d", type=float, default=None, help="Probability of a single-image batch (default 0.5)")
    #
    sp = subparsers.add_parser("sample", parents=[common], help="Sample triplanes for a caption")
    sp.add_argument("--model", required=True, help="Diffusion checkpoint")
    sp.add_argument("--caption", default=None, help="Caption (omit for unconditional samples)")
    sp.add_argument("--steps", type=int, default=None, help="Sampling steps (default 50)")
    sp.add_argument("--cfg", type=float, default=None, help="Classifier-free guidance scale (default 5.0)")
    sp.add_argument("--count", type=int, default=None, help="Number of samples with seeds seed, seed + 1, ... (default 1)")
    #
    sp = subparsers.add_parser("refine", parents=[common], help="Score distillation refinement of a triplane")
    sp.add_argument("--model", required=True, help="Diffusion checkpoint")
    sp.add_argument("--decoder", required=True, help="Decoder checkpoint")
    sp.add_argument("--triplane", required=True, help="Triplane file")
    sp.add_argument("--caption", required=True, help="Caption")
    sp.add_argument("--steps", type=int, default=None, help="Refinement steps (default 2000)")
    sp.add_argument("--cfg", type=float, default=None, help="Guidance scale (default 20)")
    sp.add_argument("--t-min", type=float, default=None, help="Lowest timestep fraction (default 0.1)")
    sp.add_argument("--t-max", type=float, default=None, help="Highest timestep fraction (default 0.5)")
    #
    sp = subparsers.add_parser("render", parents=[common], help="Render views of a triplane")
    sp.add_argument("--triplane", required=True, help="Triplane file")
    sp.add_argument("--decoder", required=True, help="Decoder checkpoint")
    sp.add_argument("--resolution", type=int, default=None, help="Render resolution (default 128)")
    sp.add_argument("--axis-views", action="store_true", help="Three orthographic axis views instead of the four orbit views")
    sp.add_argument("--pseudo-images", action="store_true", help="Also write the six pseudo-images")
    #
    sp = subparsers.add_parser("export-mesh", parents=[common], help="Extract a vertex colored PLY mesh")
    sp.add_argument("--triplane", required=True, help="Triplane file")
    sp.add_argument("--decoder", required=True, help="Decoder checkpoint")
    sp.add_argument("--grid", type=int, default=None, help="Grid resolution (default 128)")
    #
    sp = subparsers.add_parser("eval", parents=[common], help="Fitting metrics and oracle retrieval")
    sp.add_argument("--data", default=None, help="gen-data output directory")
    sp.add_argument("--triplanes", default=None, help="fit output directory")
    sp.add_argument("--decoder", required=True, help="Decoder checkpoint")
    sp.add_argument("--model", default=None, help="Diffusion checkpoint")
    sp.add_argument("--sweep-cfg", type=floatList, default=None, help="Guidance scales, e.g. 1,3,5,7.5,10")
    sp.add_argument("--eval-seeds", type=int, default=None, help="Samples per caption (default 5)")
    return parser


def getOverrides(args):
    """Map command line flags onto configuration keys; unset flags are None."""
    sc = args.subCommand
    oD = {"seed": args.seed, "numProc": args.num_proc}
    if sc == "gen-data":
        oD.update({"nScenes": args.n_scenes, "viewsPerScene": args.views, "viewResolution": args.resolution})
    elif sc == "train-decoder":
        oD.update({"sharedObjects": args.objects, "sharedSteps": args.steps})
    elif sc == "fit":
        oD.update({"steps": args.steps, "lambdaDepth": args.lambda_depth})
    elif sc == "train-diffusion":
        oD.update({"trainSteps": args.steps, "p2D": args.p2d})
    elif sc == "sample":
        oD.update({"sampleSteps": args.steps, "cfgScale": args.cfg, "sampleCount": args.count})
    elif sc == "refine":
        oD.update({"steps": args.steps, "cfgScale": args.cfg, "tMin": args.t_min, "tMax": args.t_max})
    elif sc == "render":
        oD.update({"renderResolution": args.resolution})
    elif sc == "export-mesh":
        oD.update({"gridResolution": args.grid})
    elif sc == "eval":
        oD.update({"evalSeeds": args.eval_seeds})
    return {k: v for k, v in oD.items() if v is not None}


def getPipelineArgs(args):
    argD = {
        "dataPath": getattr(args, "data", None),
        "decoderPath": getattr(args, "decoder", None),
        "triplanesPath": getattr(args, "triplanes", None),
        "triplanePath": getattr(args, "triplane", None),
        "modelPath": getattr(args, "model", None),
        "caption": getattr(args, "caption", None),
        "indexList": getattr(args, "indices", None),
        "axisViews": getattr(args, "axis_views", False),
        "pseudoImages": getattr(args, "pseudo_images", False),
        "sweepCfg": getattr(args, "sweep_cfg", None),
    }
    return {k: v for k, v in argD.items() if v is not None}


def main(argv=None):
    parser = buildParser()
    try:
        args = parser.parse_args(sys.argv[1:] if argv is None else argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INVALID
    #
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s [%(levelname)s]-%(module)s.%(funcName)s: %(message)s")
    logger.setLevel(level)
    if args.num_threads:
        torch.set_num_threads(args.num_threads)
    try:
        wb = TriPlaneWorkbench(args.subCommand, outPath=args.out, configFilePath=args.config, overrideD=getOverrides(args))
        retPath = wb.run(**getPipelineArgs(args))
        logger.info("%s wrote %s", args.subCommand, retPath)
        return EXIT_OK
    except (ValueError, FormatError) as e:
        logger.error("%s: %s", args.subCommand, str(e))
        return EXIT_INVALID
    except Exception as e:
        logger.exception("Failing with %s", str(e))
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
