from pathlib import Path

import pytest
import yaml

from pipeline.config import dump_run_config
from pipeline.runner import write_phantoms


def shrink_run(config_path: Path, **overrides) -> Path:
    """Rewrite a generated run.yaml with a two-level network small enough for tests."""
    data = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    data["unet"] = {"levels": 2, "base_features": 2}
    data["train"] = {
        "patch_size": [8, 8, 8],
        "epochs": 2,
        "iterations_per_epoch": 2,
        "batch_size": 1,
        "learning_rate": 0.01,
        "prefetch_batches": 0,
    }
    data["patching"] = {"patch_size": [8, 8, 8], "overlap": [4, 4, 4]}
    data.update(overrides)
    return dump_run_config(data, config_path)


@pytest.fixture
def phantom_run(tmp_path) -> Path:
    """Three 16³ phantoms and a shrunken run.yaml next to them."""
    config_path = write_phantoms(tmp_path / "data", count=3, size=16, seed=0)
    return shrink_run(config_path)
