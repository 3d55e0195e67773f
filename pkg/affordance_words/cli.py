"""Command line interface for affordance-words."""

import argparse
import sys

from . import __version__
from .display import Colors
from .domain import ACTION, OBJVEL, SHAPE, SIZE
from .fusion import STRATEGY_CHOICES
from .gesture import PRIOR_CHOICES
from .runner import DEFAULT_THRESHOLD, PipelineRunner

COMMANDS = ("gen", "train", "classify", "predict-effect", "word-delta", "eval")


def _add_common(parser: argparse.ArgumentParser, default):
    """Flags accepted both before and after the subcommand.

    Subparsers pass ``argparse.SUPPRESS`` so an omitted flag keeps the value
    given before the subcommand.
    """
    parser.add_argument(
        "--config",
        "-c",
        metavar="PATH",
        default=default,
        help="JSON config file (see templates/config.json)",
    )
    parser.add_argument(
        "--seed", type=int, metavar="N", default=default, help="Random seed"
    )
    parser.add_argument(
        "--fusion",
        choices=STRATEGY_CHOICES,
        default=default,
        help="How gesture and network evidence combine (default: hard)",
    )
    parser.add_argument(
        "--data",
        metavar="DIR",
        default=default,
        help="Corpus directory (default: data)",
    )
    parser.add_argument(
        "--models",
        metavar="DIR",
        default=default,
        help="Model directory (default: models)",
    )
    parser.add_argument(
        "--outputs",
        metavar="DIR",
        default=default,
        help="Report directory (default: outputs)",
    )
    parser.add_argument(
        "--verbose",
        "-v",
        action="store_true",
        default=default if default is argparse.SUPPRESS else False,
        help="Enable verbose output",
    )
    parser.add_argument(
        "--quiet",
        "-q",
        action="store_true",
        default=default if default is argparse.SUPPRESS else False,
        help="Only print results, warnings and errors",
    )


def _add_object(parser: argparse.ArgumentParser, objvel: bool = False):
    parser.add_argument(
        "--shape", required=True, help=f"Object shape ({', '.join(SHAPE.values)})"
    )
    parser.add_argument(
        "--size", required=True, help=f"Object size ({', '.join(SIZE.values)})"
    )
    if objvel:
        parser.add_argument(
            "--objvel",
            required=True,
            help=f"Observed object velocity ({', '.join(OBJVEL.values)})",
        )


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser.

    Returns:
        Configured ArgumentParser instance.
    """
    parser = argparse.ArgumentParser(
        prog="affordance-words",
        description=(
            "affordance-words - Affordances, words and gesture recognition "
            "in one probabilistic model"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Synthetic corpus, both models, evaluation
  affordance-words gen --n 300 --seed 7 --out data/
  affordance-words train
  affordance-words eval

  # Expected object motion when this gesture is aimed at a small ball
  affordance-words predict-effect --trajectory data/heldout/000050.csv \\
      --shape sphere --size small

  # Which words become more or less likely once the action is known
  affordance-words word-delta --action tap --shape sphere --size big --objvel fast

Exit Codes:
  0 - Success
  1 - Inference failure or interrupted
  2 - Invalid arguments, configuration or I/O error
  3 - Training failed
  4 - Unusable input data
  5 - Unknown label or word
        """,
    )

    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    _add_common(parser, None)

    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    gen = sub.add_parser("gen", parents=[common], help="Generate a synthetic corpus")
    gen.add_argument(
        "--n", type=int, help="Number of experiment records (default: 300)"
    )
    gen.add_argument(
        "--holdout-per-class",
        type=int,
        metavar="N",
        help="Held-out gestures per action (default: 50)",
    )
    gen.add_argument(
        "--out", metavar="DIR", dest="out", help="Output directory (same as --data)"
    )

    train = sub.add_parser(
        "train", parents=[common], help="Train the network and the gesture HMMs"
    )
    train.add_argument("--alpha", type=float, help="CPT smoothing (default: 1.0)")
    train.add_argument(
        "--min-count", type=int, metavar="N", help="Vocabulary threshold (default: 1)"
    )
    train.add_argument(
        "--states", type=int, metavar="Q", help="HMM states (default: 5)"
    )
    train.add_argument(
        "--mixtures", type=int, metavar="M", help="Gaussians per state (default: 2)"
    )
    train.add_argument(
        "--rate", type=float, help="Resampling rate in samples/s (default: 30)"
    )
    train.add_argument(
        "--max-iters",
        type=int,
        metavar="N",
        help="Baum-Welch iterations (default: 100)",
    )
    train.add_argument(
        "--tol", type=float, help="Relative log-likelihood tolerance (default: 1e-6)"
    )
    train.add_argument(
        "--workers", type=int, metavar="N", help="Train HMMs in parallel (default: 1)"
    )
    train.add_argument(
        "--priors", choices=PRIOR_CHOICES, help="Action priors (default: uniform)"
    )

    classify = sub.add_parser(
        "classify", parents=[common], help="Recognize the action in a trajectory"
    )
    classify.add_argument("--trajectory", "-t", metavar="CSV", required=True)
    classify.add_argument(
        "--phases", action="store_true", help="Show the decoded state sequence"
    )

    predict = sub.add_parser(
        "predict-effect",
        parents=[common],
        help="Predict object velocity from a gesture and object features",
    )
    predict.add_argument("--trajectory", "-t", metavar="CSV", required=True)
    _add_object(predict)

    delta = sub.add_parser(
        "word-delta",
        parents=[common],
        help="Change in word probabilities when the action is added",
    )
    source = delta.add_mutually_exclusive_group(required=True)
    source.add_argument("--trajectory", "-t", metavar="CSV")
    source.add_argument("--action", help=f"Action label ({', '.join(ACTION.values)})")
    _add_object(delta, objvel=True)
    delta.add_argument(
        "--threshold",
        type=float,
        default=DEFAULT_THRESHOLD,
        help=f"Hide words with |delta| below this (default: {DEFAULT_THRESHOLD})",
    )

    sub.add_parser("eval", parents=[common], help="Evaluate the trained models")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    data = getattr(args, "out", None) or args.data
    return {
        "seed": args.seed,
        "fusion": args.fusion,
        "data": data,
        "models": args.models,
        "outputs": args.outputs,
        "n": getattr(args, "n", None),
        "holdout_per_class": getattr(args, "holdout_per_class", None),
        "alpha": getattr(args, "alpha", None),
        "min_count": getattr(args, "min_count", None),
        "states": getattr(args, "states", None),
        "mixtures": getattr(args, "mixtures", None),
        "rate": getattr(args, "rate", None),
        "max_iters": getattr(args, "max_iters", None),
        "tol": getattr(args, "tol", None),
        "workers": getattr(args, "workers", None),
        "priors": getattr(args, "priors", None),
    }


def _options(args: argparse.Namespace) -> dict:
    if args.command == "classify":
        return {"trajectory": args.trajectory, "phases": args.phases}
    if args.command == "predict-effect":
        return {"trajectory": args.trajectory, "shape": args.shape, "size": args.size}
    if args.command == "word-delta":
        return {
            "trajectory": args.trajectory,
            "action": args.action,
            "shape": args.shape,
            "size": args.size,
            "objvel": args.objvel,
            "threshold": args.threshold,
        }
    return {}


def main(argv=None) -> int:
    """Main entry point for the CLI.

    Args:
        argv: Command line arguments (default: sys.argv[1:]).

    Returns:
        Exit code.
    """
    Colors.init()

    parser = create_parser()
    args = parser.parse_args(argv)

    runner = PipelineRunner(
        config_path=args.config,
        overrides=_overrides(args),
        verbose=args.verbose,
        quiet=args.quiet,
    )

    return runner.run(args.command, **_options(args))


if __name__ == "__main__":
    sys.exit(main())
