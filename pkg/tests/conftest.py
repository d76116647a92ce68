import os
import sys

# allow running the tests from a source checkout without installing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import pytest  # noqa: E402


@pytest.fixture(scope="session")
def suite_reports():
    """One full-scale battery run shared by the acceptance tests."""
    from nlcsbp import suite

    return suite.run_all(seed=suite.DEFAULT_SEED, workers=1)
