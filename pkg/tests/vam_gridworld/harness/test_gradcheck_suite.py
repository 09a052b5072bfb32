import unittest
from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).parent.parent.parent.parent / "src"))

from vam_gridworld.harness.gradcheck_suite import PRIMITIVE_CASES, TOLERANCE, run_gradcheck_suite


class TestGradcheckSuite(unittest.TestCase):

    def test_every_case_passes(self):
        results = run_gradcheck_suite(instances=3)
        self.assertEqual([r.name for r in results], list(PRIMITIVE_CASES) + ['compute_loss'])
        failed = [(r.name, r.max_relative_error) for r in results if not r.passed]
        self.assertEqual(failed, [])
        for r in results:
            self.assertEqual(r.tolerance, TOLERANCE)
            self.assertEqual(r.instances, 3)

    def test_name_filter(self):
        results = run_gradcheck_suite(instances=2, names=('softmax', 'layer_norm'))
        self.assertEqual([r.name for r in results], ['softmax', 'layer_norm'])

    def test_reproducible(self):
        a = run_gradcheck_suite(instances=2, names=('attention',))
        b = run_gradcheck_suite(instances=2, names=('attention',))
        self.assertEqual(a[0].max_relative_error, b[0].max_relative_error)


if __name__ == '__main__':
    unittest.main()
