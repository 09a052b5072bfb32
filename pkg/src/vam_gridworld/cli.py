"""
Command-line entry point.

    python -m vam_gridworld gen-data --config cfg.json --out data/
    python -m vam_gridworld train --data data/ --out runs/train model.hidden=32
    python -m vam_gridworld eval --checkpoint runs/train/model --split valid_unseen --out runs/eval
    python -m vam_gridworld ablate --out runs/ablate
    python -m vam_gridworld gap-study --seeds 5 --out runs/gap
    python -m vam_gridworld gradcheck

Every command writes ``run_config.json`` (tool version, command, effective
config) and ``timings.json`` into its output directory. Failures print one
JSON line ``{"error": ..., "error_type": ...}`` to stderr and exit with the
code of their class.
"""

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from vam_gridworld import __version__
from vam_gridworld.agent.model import VamModel
from vam_gridworld.common.errors import (ConfigError, DataError, EvaluationError, GenerationError,
                                         PlanningError, TrainingError, VamError)
from vam_gridworld.env.config import SPLIT_NAMES
from vam_gridworld.env.dataset import check_split_access, generate_split, load_split, write_dataset
from vam_gridworld.env.generator import Episode
from vam_gridworld.env.instructions import load_vocabulary
from vam_gridworld.harness.ablation import ablation_report, run_ablation
from vam_gridworld.harness.config import RunConfig, load_run_config, worker_count
from vam_gridworld.harness.gap_study import gap_study
from vam_gridworld.harness.gradcheck_suite import INSTANCES, run_gradcheck_suite
from vam_gridworld.harness.metrics import evaluate_splits, subgoal_report
from vam_gridworld.harness.reports import (SUBGOAL_COLUMNS, loss_curve_rows, metrics_report, metrics_rows,
                                           write_csv, write_json)
from vam_gridworld.harness.rollout import AlwaysStopPolicy, ModelPolicy, OraclePolicy, Policy, RandomPolicy
from vam_gridworld.harness.train import select_epoch, train

logger = logging.getLogger(__name__)

COMMANDS = ('gen-data', 'train', 'eval', 'ablate', 'gap-study', 'gradcheck')
POLICIES = ('model', 'oracle', 'random', 'stop')
DEFAULT_EVAL_SPLITS = ('valid_seen', 'valid_unseen')
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

EXIT_OK = 0
EXIT_GRADCHECK = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_TRAINING = 4
EXIT_EVALUATION = 5

# Exit code for a VamError with no class of its own, by command.
_STAGE_EXIT = {
    'gen-data': EXIT_DATA,
    'train': EXIT_TRAINING,
    'eval': EXIT_EVALUATION,
    'ablate': EXIT_EVALUATION,
    'gap-study': EXIT_EVALUATION,
    'gradcheck': EXIT_GRADCHECK,
}


@dataclass(frozen=True)
class CliCommand:
    name: str
    config: RunConfig
    out: str
    argv: Tuple[str, ...] = ()
    config_path: Optional[str] = None
    overrides: Tuple[str, ...] = ()
    data: Optional[str] = None
    checkpoint: Optional[str] = None
    policy: str = 'model'
    splits: Tuple[str, ...] = DEFAULT_EVAL_SPLITS
    select_epoch: bool = False
    instances: int = INSTANCES
    log_level: str = 'INFO'


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--config', help='JSON run config; defaults are used when omitted')
    common.add_argument('--out', help='Output directory (default: runs/<command>)')
    common.add_argument('--log-level', default='INFO', choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'))
    common.add_argument('overrides', nargs='*', metavar='KEY=VALUE', help='Dotted config overrides, e.g. model.hidden=32')

    parser = _Parser(prog='vam_gridworld', description='Gridworld instruction-following benchmark and agent')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    sub.add_parser('gen-data', parents=[common], help='Generate and write every split')

    p = sub.add_parser('train', parents=[common], help='Train one model')
    p.add_argument('--data', help='Dataset directory; episodes are generated in memory when omitted')
    p.add_argument('--select-epoch', action='store_true', help='Score every epoch checkpoint on valid_unseen')

    p = sub.add_parser('eval', parents=[common], help='Evaluate a policy')
    p.add_argument('--data')
    p.add_argument('--checkpoint', help='Checkpoint stem (required for --policy model)')
    p.add_argument('--policy', default='model', choices=POLICIES)
    p.add_argument('--split', action='append', choices=SPLIT_NAMES, dest='splits',
                   help='Split to evaluate; repeatable (default: valid_seen and valid_unseen)')

    p = sub.add_parser('ablate', parents=[common], help='Train and score the four ablation rows')
    p.add_argument('--data')

    p = sub.add_parser('gap-study', parents=[common], help='Seed variance and validation/test gap')
    p.add_argument('--data')
    p.add_argument('--seeds', type=int, help='Number of training seeds (sets gap_study.seeds)')

    p = sub.add_parser('gradcheck', parents=[common], help='Finite-difference checks of every primitive')
    p.add_argument('--instances', type=int, default=INSTANCES)
    return parser


def parse_and_validate(argv: Sequence[str]) -> CliCommand:
    """
    Parse arguments and load the effective config before anything is written.

    Raises:
        ConfigError: For unknown flags, a missing or invalid config file,
            bad overrides, or inconsistent flag combinations.
    """
    args = build_parser().parse_args(list(argv))
    overrides = list(args.overrides)
    if getattr(args, 'seeds', None) is not None:
        overrides.append(f'gap_study.seeds={args.seeds}')
    config = load_run_config(args.config, overrides)

    policy = getattr(args, 'policy', 'model')
    checkpoint = getattr(args, 'checkpoint', None)
    if args.command == 'eval' and policy == 'model' and checkpoint is None:
        raise ConfigError("eval: --checkpoint is required with --policy model")
    instances = getattr(args, 'instances', INSTANCES)
    if instances < 1:
        raise ConfigError(f"gradcheck: --instances must be positive, got {instances}")

    return CliCommand(
        name=args.command,
        config=config,
        out=args.out or str(Path('runs') / args.command),
        argv=tuple(argv),
        config_path=args.config,
        overrides=tuple(overrides),
        data=getattr(args, 'data', None),
        checkpoint=checkpoint,
        policy=policy,
        splits=tuple(args.splits) if getattr(args, 'splits', None) else DEFAULT_EVAL_SPLITS,
        select_epoch=getattr(args, 'select_epoch', False),
        instances=instances,
        log_level=args.log_level,
    )


def exit_code(error: VamError, command: str) -> int:
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, (DataError, GenerationError, PlanningError)):
        return EXIT_DATA
    if isinstance(error, TrainingError):
        return EXIT_TRAINING
    if isinstance(error, EvaluationError):
        return EXIT_EVALUATION
    return _STAGE_EXIT.get(command, EXIT_EVALUATION)


def _report_error(error: Exception) -> None:
    print(json.dumps({"error": str(error), "error_type": type(error).__name__}), file=sys.stderr)


def _episodes(command: CliCommand, split: str, purpose: str) -> List[Episode]:
    if command.data is not None:
        return load_split(command.data, split, command.config.env, purpose)
    check_split_access(split, purpose)
    return generate_split(split, command.config.data.sizes()[split], command.config.env)


def _policy(command: CliCommand) -> Policy:
    if command.policy == 'oracle':
        return OraclePolicy()
    if command.policy == 'stop':
        return AlwaysStopPolicy()
    if command.policy == 'random':
        return RandomPolicy(command.config.train.seed)
    return ModelPolicy(VamModel.load(command.checkpoint), load_vocabulary())


def _gen_data(command: CliCommand) -> int:
    write_dataset(command.out, command.config.data.sizes(), command.config.env)
    return EXIT_OK


def _train(command: CliCommand) -> int:
    config = command.config
    result = train(config, _episodes(command, 'train', 'train'), command.out)
    out = Path(command.out)
    write_csv(str(out / 'loss_curve.csv'), loss_curve_rows(result.loss_curve), ('step', 'loss'))
    report: Dict = {
        "config_hash": config.hash,
        "seed": config.train.seed,
        "row": config.model.row,
        "final_loss": result.final_loss,
        "epochs": result.epochs,
    }
    if command.select_epoch:
        index, rates = select_epoch(result.checkpoints, _episodes(command, 'valid_unseen', 'train'), config)
        report["best_epoch"] = index + 1
        report["valid_unseen_sr_by_epoch"] = rates
    write_json(str(out / 'train.json'), report)
    return EXIT_OK


def _eval(command: CliCommand) -> int:
    config = command.config
    episodes = {split: _episodes(command, split, 'eval') for split in command.splits}
    policy = _policy(command)
    workers = worker_count()
    try:
        split_metrics = evaluate_splits(policy, episodes, config.env, workers)
        pooled = [ep for split in command.splits for ep in episodes[split]]
        subgoals = subgoal_report(policy, pooled, config.env)
    except (ConfigError, DataError, EvaluationError):
        raise
    except VamError as e:
        raise EvaluationError(f"Evaluation failed: {e}") from e
    out = Path(command.out)
    write_json(str(out / 'metrics.json'),
               metrics_report(split_metrics, subgoals, config.hash, config.train.seed, command.policy))
    write_csv(str(out / 'metrics.csv'), metrics_rows(split_metrics, config.train.seed))
    write_csv(str(out / 'subgoals.csv'), [s.to_dict() for s in subgoals], SUBGOAL_COLUMNS)
    return EXIT_OK


def _ablate(command: CliCommand) -> int:
    config = command.config
    rows = run_ablation(config, _episodes(command, 'train', 'ablation'),
                        _episodes(command, 'valid_unseen', 'ablation'), command.out, workers=worker_count())
    out = Path(command.out)
    write_json(str(out / 'ablation.json'), ablation_report(rows, config))
    write_csv(str(out / 'ablation.csv'), [r.to_dict() for r in rows])
    write_csv(str(out / 'ablation_subgoals.csv'),
              [dict(s.to_dict(), row=r.row) for r in rows for s in r.subgoals], ('row',) + SUBGOAL_COLUMNS)
    return EXIT_OK


def _gap_study(command: CliCommand) -> int:
    config = command.config
    report = gap_study(
        config,
        _episodes(command, 'train', 'gap_study'),
        _episodes(command, 'valid_unseen', 'gap_study'),
        _episodes(command, 'test_unseen', 'gap_study'),
        out_dir=command.out,
        workers=worker_count(),
    )
    out = Path(command.out)
    write_json(str(out / 'gap_study.json'), dict(report.to_dict(), config_hash=config.hash))
    write_csv(str(out / 'gap_study.csv'), [r.to_dict() for r in report.rows])
    return EXIT_OK


def _gradcheck(command: CliCommand) -> int:
    results = run_gradcheck_suite(instances=command.instances, seed=command.config.train.seed)
    write_json(str(Path(command.out) / 'gradcheck.json'), [
        {"name": r.name, "max_relative_error": r.max_relative_error, "tolerance": r.tolerance,
         "instances": r.instances, "passed": r.passed}
        for r in results
    ])
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error("gradcheck failed for: %s", ', '.join(failed))
        return EXIT_GRADCHECK
    return EXIT_OK


_HANDLERS = {
    'gen-data': _gen_data,
    'train': _train,
    'eval': _eval,
    'ablate': _ablate,
    'gap-study': _gap_study,
    'gradcheck': _gradcheck,
}


def write_run_manifest(command: CliCommand) -> Path:
    return write_json(str(Path(command.out) / 'run_config.json'), {
        "tool": "vam_gridworld",
        "version": __version__,
        "command": command.name,
        "argv": list(command.argv),
        "config_path": command.config_path,
        "overrides": list(command.overrides),
        "config": command.config.to_dict(),
        "config_hash": command.config.hash,
    })


def run(command: CliCommand) -> int:
    """
    Execute a validated command.

    Returns:
        0 on success, 1 when gradcheck finds a failing primitive, otherwise
        the exit code of the error class (config 2, data 3, training 4,
        evaluation 5).
    """
    start = time.perf_counter()
    try:
        write_run_manifest(command)
        code = _HANDLERS[command.name](command)
    except VamError as e:
        logger.error("%s failed: %s", command.name, e)
        _report_error(e)
        return exit_code(e, command.name)
    write_json(str(Path(command.out) / 'timings.json'),
               {"command": command.name, "seconds": round(time.perf_counter() - start, 3)})
    logger.info("%s finished in %.1fs; outputs in %s", command.name, time.perf_counter() - start, command.out)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        command = parse_and_validate(argv)
    except ConfigError as e:
        _report_error(e)
        return EXIT_CONFIG
    logging.basicConfig(level=getattr(logging, command.log_level), format=LOG_FORMAT)
    return run(command)
