"""Command orchestration: load config, run one pipeline step, report."""

import json
from pathlib import Path
from typing import Any, Optional

from . import display
from .bayesnet import learn_cpts, load_network, save_network, word_delta
from .config import RunConfig, apply_overrides, load_config
from .display import Colors
from .domain import ACTION, OBJVEL, SHAPE, SIZE, build_vocabulary, read_records
from .errors import AffordanceError, MalformedData
from .evaluation import DELTA_FEATURES, HeldoutGesture, effect_prediction, evaluate
from .gesture import (
    GestureModelSet,
    classify,
    load_models,
    load_sequences,
    save_models,
    train_model_set,
)
from .hmm import viterbi_path
from .logging_setup import setup_logging
from .simgen import generate_corpus, write_corpus
from .trajectory import FeatureSequence, preprocess, read_manifest, read_trajectory_csv

DEFAULT_THRESHOLD = 0.005


class PipelineRunner:
    """Runs one subcommand and turns failures into exit codes.

    Exit codes: 0 success, 1 inference or unexpected failure, 2 configuration
    or I/O, 3 training, 4 bad input data, 5 unknown label.
    """

    def __init__(
        self,
        config_path: Optional[str] = None,
        overrides: Optional[dict[str, Any]] = None,
        verbose: bool = False,
        quiet: bool = False,
    ):
        """Initialize the runner.

        Args:
            config_path: JSON config file layered over the defaults.
            overrides: Command-line values layered over the file; ``None``
                       entries are ignored.
            verbose: Show DEBUG logs and tracebacks.
            quiet: Only warnings and errors (results are still printed).
        """
        self.logger = setup_logging(verbose, quiet)
        self.verbose = verbose
        self.quiet = quiet
        self.config_path = config_path
        self.overrides = overrides or {}
        self.config = RunConfig()

    def load_config(self) -> RunConfig:
        config = load_config(self.config_path) if self.config_path else RunConfig()
        self.config = apply_overrides(config, **self.overrides).validate()
        return self.config

    # -- helpers ------------------------------------------------------------

    def write_report(self, command: str, data: dict) -> Path:
        path = self.config.paths.report(command)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, sort_keys=True, indent=2)
            f.write("\n")
        self.logger.debug("Wrote %s", path)
        return path

    def read_gesture(self, path: str, models: GestureModelSet) -> FeatureSequence:
        try:
            traj = read_trajectory_csv(path)
        except OSError as e:
            raise MalformedData(path, f"cannot read trajectory ({e.strerror})") from e
        return preprocess(traj, models.rate)

    def load_trained(self):
        paths = self.config.paths
        return load_network(paths.network), load_models(paths.gesture_models)

    # -- commands -----------------------------------------------------------

    def cmd_gen(self) -> int:
        cfg, sim = self.config, self.config.sim
        self.logger.info(
            "Generating %d records and %d held-out gestures per class (seed %d)",
            sim.n,
            sim.holdout_per_class,
            cfg.seed,
        )
        corpus = generate_corpus(
            sim.n,
            sim.table,
            sim.grammar,
            seed=cfg.seed,
            params=sim.gesture,
            holdout_per_class=sim.holdout_per_class,
        )
        layout = write_corpus(
            cfg.paths.data, corpus, cfg.seed, sim.table, sim.grammar, sim.gesture
        )
        display.print_section(
            "Corpus",
            [
                ("Records", f"{layout.records} ({len(corpus.records)})"),
                (
                    "Trajectories",
                    f"{layout.trajectories}/ ({len(corpus.trajectories)})",
                ),
                ("Gestures", str(layout.gestures)),
                ("Held-out", f"{layout.heldout_manifest} ({len(corpus.heldout)})"),
                ("Manifest", str(layout.manifest)),
            ],
        )
        return 0

    def cmd_train(self) -> int:
        cfg = self.config
        layout = cfg.paths.corpus
        records = read_records(layout.records)
        self.logger.info(
            "Learning the affordance-words network from %d records", len(records)
        )
        vocabulary = build_vocabulary(records, cfg.bayesnet.min_count)
        net = learn_cpts(
            records,
            structure=cfg.bayesnet.structure,
            alpha=cfg.bayesnet.alpha,
            vocabulary=vocabulary,
        )

        gcfg = cfg.gesture
        sequences = load_sequences(read_manifest(layout.gestures), gcfg.rate)
        self.logger.info(
            "Training %d gesture HMMs (%d states, %d mixtures)",
            len(sequences),
            gcfg.states,
            gcfg.mixtures,
        )
        models, results = train_model_set(
            sequences,
            n_states=gcfg.states,
            n_mixtures=gcfg.mixtures,
            max_iters=gcfg.max_iters,
            tol=gcfg.tol,
            workers=gcfg.workers,
            priors=gcfg.priors,
            rate=gcfg.rate,
        )

        Path(cfg.paths.models).mkdir(parents=True, exist_ok=True)
        save_network(cfg.paths.network, net)
        save_models(cfg.paths.gesture_models, models)

        for label, result in results.items():
            status = "converged" if result.converged else "max iterations"
            print(
                f"{Colors.BOLD}{label}{Colors.RESET} "
                f"({len(sequences[label])} sequences, {result.iterations} "
                f"iterations, {status})"
            )
            for i, ll in enumerate(result.trace):
                print(f"  {i:>3}  {ll:.6f}")
        print(flush=True)
        display.print_section(
            "Models",
            [
                ("Network", f"{cfg.paths.network} ({len(vocabulary)} words)"),
                ("Gestures", str(cfg.paths.gesture_models)),
            ],
        )
        self.write_report(
            "train",
            {
                "vocabulary": vocabulary.to_list(),
                "traces": {label: r.trace for label, r in results.items()},
                "iterations": {label: r.iterations for label, r in results.items()},
                "converged": {label: r.converged for label, r in results.items()},
            },
        )
        return 0

    def cmd_classify(self, trajectory: str, phases: bool = False) -> int:
        models = load_models(self.config.paths.gesture_models)
        seq = self.read_gesture(trajectory, models)
        p_hmm = classify(models, seq)
        display.print_distribution(
            "Gesture posterior p(Action)", ACTION.values, p_hmm.probs
        )
        report: dict[str, Any] = {"trajectory": trajectory, "action": p_hmm.as_dict()}
        if phases:
            best = p_hmm.argmax()
            path = viterbi_path(models.models[best], seq)
            spans = _phase_spans(path.tolist(), seq.rate)
            display.print_section(
                f"Phases of '{best}'",
                [(f"state {s}", f"{a:.2f}-{b:.2f} s") for s, a, b in spans],
            )
            report["phases"] = {"model": best, "states": path.tolist()}
        self.write_report("classify", report)
        return 0

    def cmd_predict_effect(self, trajectory: str, shape: str, size: str) -> int:
        SHAPE.index(shape)
        SIZE.index(size)
        net, models = self.load_trained()
        p_hmm = classify(models, self.read_gesture(trajectory, models))
        strategy = self.config.fusion
        objvel = effect_prediction(net, p_hmm, shape, size, strategy)

        display.print_distribution(
            "Gesture posterior p(Action)", ACTION.values, p_hmm.probs
        )
        display.print_distribution(
            f"p(ObjVel | Shape={shape}, Size={size}, gesture) [{strategy}]",
            OBJVEL.values,
            objvel.probs,
        )
        self.write_report(
            "predict-effect",
            {
                "trajectory": trajectory,
                "strategy": strategy.value,
                "evidence": {SHAPE.name: shape, SIZE.name: size},
                "action": p_hmm.as_dict(),
                "objvel": objvel.as_dict(),
            },
        )
        return 0

    def cmd_word_delta(
        self,
        shape: str,
        size: str,
        objvel: str,
        trajectory: Optional[str] = None,
        action: Optional[str] = None,
        threshold: float = DEFAULT_THRESHOLD,
    ) -> int:
        SHAPE.index(shape)
        SIZE.index(size)
        OBJVEL.index(objvel)
        if trajectory is not None:
            net, models = self.load_trained()
            action = classify(models, self.read_gesture(trajectory, models)).argmax()
            self.logger.info("Gesture recognized as '%s'", action)
        else:
            ACTION.index(action)
            net = load_network(self.config.paths.network)

        features = {SIZE.name: size, SHAPE.name: shape}
        effects = {OBJVEL.name: objvel}
        deltas = word_delta(net, features, effects, action)
        display.print_deltas(
            f"Δp(word) adding Action={action} to "
            f"Size={size}, Shape={shape}, ObjVel={objvel}",
            deltas,
            threshold,
        )
        shown = {w: d for w, d in deltas.items() if abs(d) >= threshold}
        self.write_report(
            "word-delta",
            {
                "action": action,
                "source": "trajectory" if trajectory is not None else "label",
                "evidence": {**features, **effects},
                "threshold": threshold,
                "deltas": shown,
                "omitted": len(deltas) - len(shown),
            },
        )
        return 0

    def cmd_eval(self) -> int:
        cfg = self.config
        net, models = self.load_trained()
        entries = read_manifest(cfg.paths.corpus.heldout_manifest)
        heldout = [
            HeldoutGesture(
                e.action,
                self.read_gesture(e.file, models),
                e.context if e.context and _has_context(e.context) else None,
            )
            for e in entries
        ]
        report = evaluate(models, net, heldout, seed=cfg.seed)

        display.print_section(
            "Gesture recognition",
            [
                ("Held-out sequences", str(len(heldout))),
                ("Accuracy", f"{report.accuracy:.4f}"),
            ],
        )
        display.print_confusion(list(report.labels), report.confusion)
        display.print_section(
            "Consistency",
            [
                ("Network vs enumeration", f"{report.oracle_max_error:.3g}"),
                ("Hard vs one-hot soft", f"{report.fusion_max_gap:.3g}"),
            ],
        )
        if report.fused_accuracy:
            display.print_section(
                "Fused action accuracy",
                [(k, f"{v:.4f}") for k, v in report.fused_accuracy.items()],
            )
        for case, probs in report.effect_predictions.items():
            display.print_distribution(
                f"p(ObjVel | Action=tap, {case})", OBJVEL.values, list(probs.values())
            )
        display.print_deltas(
            "Δp(word) adding Action=tap to "
            + ", ".join(f"{k}={v}" for k, v in DELTA_FEATURES.items())
            + ", ObjVel=fast",
            report.word_deltas,
            DEFAULT_THRESHOLD,
        )
        self.write_report("eval", report.to_dict())
        return 0

    # -- entry point --------------------------------------------------------

    def run(self, command: str, **options: Any) -> int:
        """Run ``command`` with its options.

        Returns:
            Exit code.
        """
        handlers = {
            "gen": self.cmd_gen,
            "train": self.cmd_train,
            "classify": self.cmd_classify,
            "predict-effect": self.cmd_predict_effect,
            "word-delta": self.cmd_word_delta,
            "eval": self.cmd_eval,
        }
        if not self.quiet:
            display.print_banner(f"affordance-words {command}")
        try:
            self.load_config()
            return handlers[command](**options)

        except KeyboardInterrupt:
            print()
            self.logger.warning("Interrupted by user")
            return 1

        except AffordanceError as e:
            self.logger.error("%s", e)
            self._traceback()
            return e.exit_code

        except OSError as e:
            self.logger.error("I/O error: %s", e)
            self._traceback()
            return 2

        except Exception as e:
            self.logger.error("%s failed: %s", command, e)
            self._traceback()
            return 1

    def _traceback(self):
        if self.verbose:
            import traceback

            traceback.print_exc()


def _has_context(context: dict) -> bool:
    return all(key in context for key in ("shape", "size", "objvel"))


def _phase_spans(states: list[int], rate: float) -> list[tuple[int, float, float]]:
    """Run-length encode a state path into (state, start s, end s)."""
    spans = []
    start = 0
    for i in range(1, len(states) + 1):
        if i == len(states) or states[i] != states[start]:
            spans.append((states[start], start / rate, (i - 1) / rate))
            start = i
    return spans
