import pytest

from pairscorer.model import init_base
from pairscorer.training import FineTuneConfig, train
from scorer_helpers import TrainedRun, write_nidulans_copies


@pytest.fixture(scope="session")
def nidulans_run(tmp_path_factory) -> TrainedRun:
    """Fine-tune on the 200-pair memorizable set with the exact recipe."""
    root = tmp_path_factory.mktemp("nidulans_run")
    pairs = write_nidulans_copies(root / "pairs.jsonl", copies=20)
    base_dir = init_base([pairs], root / "base", seed=13)
    config = FineTuneConfig(base_model=str(base_dir))  # 10 epochs, batch 16, lr 3e-5
    result = train(pairs, config, root / "model")
    return TrainedRun(pairs, base_dir, root / "model", config, result)
