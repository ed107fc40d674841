import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make tests/oracles.py importable

from lbandsm import config, synth


@pytest.fixture(scope="session")
def synthetic_campaign(tmp_path_factory):
    """One deterministic forward-generated campaign shared by the
    pipeline-level tests."""
    root = tmp_path_factory.mktemp("campaign")
    truth = synth.generate_campaign(root, seed=20231111, n_days=5, n_samples=60)
    return root, truth


@pytest.fixture(scope="session")
def campaign_config(synthetic_campaign):
    root, _ = synthetic_campaign
    return config.load_campaign(root / "campaign.cfg")
