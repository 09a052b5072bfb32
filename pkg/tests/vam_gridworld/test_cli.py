import io
import json
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr
from pathlib import Path
import sys

import pandas as pd

sys.path.insert(0, str(Path(__file__).parent.parent.parent / "src"))

from vam_gridworld import __version__
from vam_gridworld.cli import (EXIT_CONFIG, EXIT_DATA, EXIT_OK, exit_code, main, parse_and_validate)
from vam_gridworld.common.errors import (ConfigError, ContractError, DataError, EvaluationError, GenerationError,
                                         TrainingError)
from vam_gridworld.env.config import SPLIT_NAMES

SMALL_DATA = [f'data.{name}=2' for name in SPLIT_NAMES]
TINY_MODEL = ['model.hidden=4', 'model.language_layers=1', 'model.cross_layers=1',
              'train.epochs=2', 'train.batch_size=2']


def run_quietly(argv):
    """Run the CLI; return (exit code, parsed stderr error line or None)."""
    stderr = io.StringIO()
    with redirect_stderr(stderr):
        code = main(argv)
    lines = [line for line in stderr.getvalue().splitlines() if line.startswith('{')]
    return code, json.loads(lines[-1]) if lines else None


class TestParsing(unittest.TestCase):

    def test_defaults(self):
        command = parse_and_validate(['eval', '--policy', 'oracle'])
        self.assertEqual(command.splits, ('valid_seen', 'valid_unseen'))
        self.assertEqual(command.out, str(Path('runs') / 'eval'))
        self.assertEqual(command.config.model.row, 4)

    def test_seeds_flag_becomes_override(self):
        command = parse_and_validate(['gap-study', '--seeds', '4'])
        self.assertEqual(command.config.gap_study.seeds, 4)
        self.assertIn('gap_study.seeds=4', command.overrides)

    def test_model_policy_needs_checkpoint(self):
        with self.assertRaises(ConfigError):
            parse_and_validate(['eval'])

    def test_bad_instances(self):
        with self.assertRaises(ConfigError):
            parse_and_validate(['gradcheck', '--instances', '0'])

    def test_exit_codes(self):
        self.assertEqual(exit_code(ConfigError('x'), 'train'), 2)
        self.assertEqual(exit_code(DataError('x'), 'eval'), 3)
        self.assertEqual(exit_code(GenerationError('x'), 'gen-data'), 3)
        self.assertEqual(exit_code(TrainingError('x'), 'ablate'), 4)
        self.assertEqual(exit_code(EvaluationError('x'), 'eval'), 5)
        self.assertEqual(exit_code(ContractError('x'), 'train'), 4)
        self.assertEqual(exit_code(ContractError('x'), 'eval'), 5)


class TestMain(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.root = Path(self.temp_dir)

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_missing_config_file(self):
        code, error = run_quietly(['gen-data', '--config', str(self.root / 'absent.json'),
                                   '--out', str(self.root / 'data')])
        self.assertEqual(code, EXIT_CONFIG)
        self.assertEqual(error["error_type"], 'ConfigError')
        self.assertFalse((self.root / 'data').exists())

    def test_unknown_override(self):
        code, error = run_quietly(['gen-data', '--out', str(self.root), 'model.depth=3'])
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn('model.depth', error["error"])

    def test_unknown_command(self):
        code, error = run_quietly(['serve'])
        self.assertEqual(code, EXIT_CONFIG)
        self.assertEqual(error["error_type"], 'ConfigError')

    def test_missing_dataset(self):
        code, error = run_quietly(['eval', '--policy', 'oracle', '--data', str(self.root / 'nowhere'),
                                   '--out', str(self.root / 'eval')])
        self.assertEqual(code, EXIT_DATA)
        self.assertEqual(error["error_type"], 'DataError')

    def test_gen_data_then_eval(self):
        data = self.root / 'data'
        self.assertEqual(run_quietly(['gen-data', '--out', str(data)] + SMALL_DATA)[0], EXIT_OK)
        self.assertTrue((data / 'manifest.json').exists())
        for split in SPLIT_NAMES:
            self.assertEqual(len(list((data / split).glob('episode_*.json'))), 2)

        out = self.root / 'eval'
        code, _ = run_quietly(['eval', '--policy', 'oracle', '--data', str(data), '--split', 'test_unseen',
                               '--out', str(out)] + SMALL_DATA)
        self.assertEqual(code, EXIT_OK)
        metrics = json.loads((out / 'metrics.json').read_text())
        self.assertEqual(metrics["splits"]["test_unseen"]["sr"], 100.0)
        self.assertEqual(metrics["policy"], 'oracle')

    def test_eval_outputs_and_reruns(self):
        args = ['eval', '--policy', 'oracle', '--split', 'valid_seen', '--split', 'valid_unseen'] + SMALL_DATA
        first, second = self.root / 'one', self.root / 'two'
        self.assertEqual(run_quietly(args + ['--out', str(first)])[0], EXIT_OK)
        self.assertEqual(run_quietly(args + ['--out', str(second)])[0], EXIT_OK)

        for name in ('metrics.json', 'metrics.csv', 'subgoals.csv'):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)

        table = pd.read_csv(first / 'metrics.csv')
        self.assertEqual(table["split"].tolist(), ['valid_seen', 'valid_unseen'])
        self.assertEqual(table["sr"].tolist(), [100.0, 100.0])
        subgoals = pd.read_csv(first / 'subgoals.csv')
        self.assertAlmostEqual(subgoals["share"].sum(), 100.0)

        manifest = json.loads((first / 'run_config.json').read_text())
        self.assertEqual(manifest["version"], __version__)
        self.assertEqual(manifest["command"], 'eval')
        self.assertEqual(manifest["config"]["data"]["valid_seen"], 2)
        self.assertEqual(manifest["overrides"], SMALL_DATA)
        self.assertEqual(len(manifest["config_hash"]), 64)
        self.assertTrue((first / 'timings.json').exists())

    def test_train_with_epoch_selection(self):
        out = self.root / 'train'
        code, _ = run_quietly(['train', '--select-epoch', '--out', str(out)] + SMALL_DATA + TINY_MODEL)
        self.assertEqual(code, EXIT_OK)
        report = json.loads((out / 'train.json').read_text())
        self.assertIn(report["best_epoch"], (1, 2))
        self.assertEqual(len(report["valid_unseen_sr_by_epoch"]), 2)
        self.assertEqual(len(pd.read_csv(out / 'loss_curve.csv')), 2)
        self.assertTrue((out / 'model.json').exists())

        eval_out = self.root / 'eval'
        code, _ = run_quietly(['eval', '--checkpoint', str(out / 'model'), '--split', 'valid_unseen',
                               '--out', str(eval_out)] + SMALL_DATA)
        self.assertEqual(code, EXIT_OK)
        self.assertIn('valid_unseen', json.loads((eval_out / 'metrics.json').read_text())["splits"])

    def test_gradcheck(self):
        out = self.root / 'gc'
        code, _ = run_quietly(['gradcheck', '--instances', '1', '--out', str(out)])
        self.assertEqual(code, EXIT_OK)
        results = json.loads((out / 'gradcheck.json').read_text())
        self.assertTrue(all(r["passed"] for r in results))
        self.assertIn('compute_loss', [r["name"] for r in results])


if __name__ == '__main__':
    unittest.main()
