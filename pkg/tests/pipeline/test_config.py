"""Tests for run configuration parsing and per-command validation."""

from pathlib import Path

import pytest

from common.errors import ConfigurationError
from pipeline.config import (
    CaseEntry,
    DatasetManifest,
    RunConfig,
    case_id_from_path,
    load_run_config,
    parse_run_config,
    validate_for_predict,
    validate_for_train,
)
from unet3d import TrainConfig, UNetConfig


class TestParseRunConfig:
    """Tests for parse_run_config."""

    def test_empty_document(self, tmp_path):
        """Test that an empty YAML document gives the defaults."""
        run = parse_run_config(None, tmp_path)
        assert run.seed == 0
        assert run.split_halves is True
        assert run.unet == UNetConfig()

    def test_unknown_top_level_key(self, tmp_path):
        """Test that a misspelt top-level key is rejected by name."""
        with pytest.raises(ConfigurationError, match="bogus"):
            parse_run_config({"bogus": 1}, tmp_path)

    def test_unknown_nested_key(self, tmp_path):
        """Test that unknown keys inside a section are rejected."""
        with pytest.raises(ConfigurationError, match="unknown keys in train"):
            parse_run_config({"train": {"lr": 0.1}}, tmp_path)

    def test_not_a_mapping(self, tmp_path):
        """Test that a list document is rejected."""
        with pytest.raises(ConfigurationError, match="mapping"):
            parse_run_config([1, 2], tmp_path)

    def test_desk_profiles(self, tmp_path):
        """Test that profile: desk starts from the desk values and applies overrides."""
        run = parse_run_config(
            {"unet": {"profile": "desk"}, "train": {"profile": "desk", "epochs": 3}}, tmp_path
        )
        assert run.unet == UNetConfig.desk()
        assert run.train.epochs == 3
        assert run.train.patch_size == (32, 32, 32)

    def test_full_profile(self, tmp_path):
        """Test that profile: full matches the full-scale constructors."""
        run = parse_run_config({"unet": {"profile": "full"}, "train": {"profile": "full"}}, tmp_path)
        assert run.unet == UNetConfig.full()
        assert run.train == TrainConfig.full()

    def test_unknown_profile(self, tmp_path):
        """Test that an unknown profile name is rejected."""
        with pytest.raises(ConfigurationError, match="profile"):
            parse_run_config({"unet": {"profile": "huge"}}, tmp_path)

    def test_train_seed_follows_run_seed(self, tmp_path):
        """Test that training is always seeded from the run seed."""
        run = parse_run_config({"seed": 5}, tmp_path)
        assert run.train.seed == 5

    def test_train_seed_not_configurable(self, tmp_path):
        """Test that train.seed is not an accepted key."""
        with pytest.raises(ConfigurationError, match="seed"):
            parse_run_config({"train": {"seed": 9}}, tmp_path)

    def test_boolean_seed_rejected(self, tmp_path):
        """Test that a YAML boolean is not accepted as an integer."""
        with pytest.raises(ConfigurationError, match="integer"):
            parse_run_config({"seed": True}, tmp_path)

    def test_workers_must_be_positive(self, tmp_path):
        """Test that a zero worker count is rejected."""
        with pytest.raises(ConfigurationError, match="workers"):
            parse_run_config({"workers": 0}, tmp_path)

    def test_invalid_value_in_section(self, tmp_path):
        """Test that out-of-range section values surface as ConfigurationError."""
        with pytest.raises(ConfigurationError):
            parse_run_config({"augment": {"apply_probability": 2.0}}, tmp_path)
        with pytest.raises(ConfigurationError):
            parse_run_config({"train": {"epochs": 0}}, tmp_path)

    @pytest.mark.parametrize(
        "data",
        [
            {"split_halves": "no"},
            {"split_halves": 1},
            {"evaluate": {"overlays": "false"}},
            {"evaluate": {"overlays": 0}},
            {"evaluate": {"report": ["metrics.tsv"]}},
        ],
    )
    def test_flags_and_report_types(self, tmp_path, data):
        """Test that switches must be YAML booleans and the report a file name."""
        with pytest.raises(ConfigurationError):
            parse_run_config(data, tmp_path)

    def test_evaluate_switches(self, tmp_path):
        """Test that boolean overlays and a report name are accepted."""
        run = parse_run_config(
            {"split_halves": False, "evaluate": {"overlays": False, "report": "scores.tsv"}},
            tmp_path,
        )
        assert run.split_halves is False
        assert run.evaluate.overlays is False
        assert run.evaluate.report == "scores.tsv"

    def test_augment_ranges_from_lists(self, tmp_path):
        """Test that YAML lists become (low, high) tuples."""
        run = parse_run_config({"augment": {"brightness_range": [0.5, 1.5]}}, tmp_path)
        assert run.augment.brightness_range == (0.5, 1.5)

    def test_patching(self, tmp_path):
        """Test inference tiling values."""
        run = parse_run_config(
            {"patching": {"patch_size": [16, 16, 16], "overlap": [8, 8, 8]}}, tmp_path
        )
        assert run.patching.patch_size == (16, 16, 16)
        assert run.patching.overlap == (8, 8, 8)
        with pytest.raises(ConfigurationError, match="three"):
            parse_run_config({"patching": {"patch_size": [16, 16]}}, tmp_path)

    def test_relative_paths_resolved(self, tmp_path):
        """Test that relative paths are taken from the config file's directory."""
        run = parse_run_config(
            {
                "output_dir": "out",
                "dataset": {"training": [{"image": "images/a.nii", "mask": "masks/a.nii"}]},
                "predict": {"inputs": ["images", "/abs/scan.nii"]},
            },
            tmp_path,
        )
        assert run.output_dir == tmp_path / "out"
        entry = run.dataset.training[0]
        assert entry == CaseEntry("a", tmp_path / "images/a.nii", tmp_path / "masks/a.nii")
        assert run.predict.inputs == [tmp_path / "images", Path("/abs/scan.nii")]

    def test_case_without_image(self, tmp_path):
        """Test that every dataset entry needs an image."""
        with pytest.raises(ConfigurationError, match="image"):
            parse_run_config({"dataset": {"training": [{"id": "x"}]}}, tmp_path)

    def test_predictions_dir_default(self, tmp_path):
        """Test that predictions go under the output directory unless configured."""
        run = parse_run_config({"output_dir": "out"}, tmp_path)
        assert run.predictions_dir == tmp_path / "out" / "predictions"

    def test_workers_default_from_env(self, tmp_path, monkeypatch):
        """Test that the worker default comes from the environment."""
        monkeypatch.setenv("FEMURSEG_WORKERS", "3")
        assert parse_run_config({}, tmp_path).workers == 3


class TestLoadRunConfig:
    """Tests for load_run_config."""

    def test_reads_file(self, tmp_path):
        """Test loading a YAML file from disk."""
        path = tmp_path / "run.yaml"
        path.write_text("seed: 4\nsplit_halves: false\n", encoding="utf-8")
        run = load_run_config(path)
        assert run.seed == 4
        assert run.split_halves is False

    def test_missing_file(self, tmp_path):
        """Test that a missing file is a configuration error."""
        with pytest.raises(ConfigurationError, match="cannot read"):
            load_run_config(tmp_path / "absent.yaml")

    def test_invalid_yaml(self, tmp_path):
        """Test that malformed YAML is a configuration error."""
        path = tmp_path / "run.yaml"
        path.write_text("seed: [1\n", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="not valid YAML"):
            load_run_config(path)


class TestOverrides:
    """Tests for RunConfig.with_overrides."""

    def test_none_means_not_given(self):
        """Test that unset command-line options leave the config alone."""
        run = RunConfig(seed=1, workers=1)
        assert run.with_overrides(seed=None, workers=None, output_dir=None) is run

    def test_seed_override_reseeds_training(self):
        """Test that overriding the seed also reseeds training."""
        run = RunConfig(seed=1, workers=1).with_overrides(seed=8, output_dir="elsewhere")
        assert run.seed == 8
        assert run.train.seed == 8
        assert run.output_dir == Path("elsewhere")


class TestDatasetManifest:
    """Tests for DatasetManifest.check_disjoint."""

    def test_disjoint(self):
        """Test that separate splits pass."""
        DatasetManifest(
            training=[CaseEntry("a", Path("a.nii"))], validation=[CaseEntry("b", Path("b.nii"))]
        ).check_disjoint()

    def test_shared_case(self):
        """Test that a case in both splits is rejected."""
        manifest = DatasetManifest(
            training=[CaseEntry("a", Path("a.nii"))], validation=[CaseEntry("a", Path("a.nii"))]
        )
        with pytest.raises(ConfigurationError, match="both"):
            manifest.check_disjoint()

    def test_shared_image_under_new_id(self):
        """Test that the same image under another id is still caught."""
        manifest = DatasetManifest(
            training=[CaseEntry("a", Path("a.nii"))], validation=[CaseEntry("b", Path("a.nii"))]
        )
        with pytest.raises(ConfigurationError):
            manifest.check_disjoint()

    def test_duplicate_ids(self):
        """Test that duplicate ids within a split are rejected."""
        manifest = DatasetManifest(
            training=[CaseEntry("a", Path("a.nii")), CaseEntry("a", Path("c.nii"))]
        )
        with pytest.raises(ConfigurationError, match="duplicate"):
            manifest.check_disjoint()


class TestValidation:
    """Tests for the per-command validators."""

    def test_train_needs_cases(self, tmp_path):
        """Test that an empty training split is rejected."""
        with pytest.raises(ConfigurationError, match="no cases"):
            validate_for_train(parse_run_config({}, tmp_path))

    def test_train_missing_mask(self, tmp_path):
        """Test that a listed mask must exist."""
        (tmp_path / "a.nii").write_bytes(b"")
        run = parse_run_config(
            {
                "unet": {"levels": 2},
                "train": {"patch_size": [8, 8, 8]},
                "dataset": {"training": [{"image": "a.nii", "mask": "m.nii"}]},
            },
            tmp_path,
        )
        with pytest.raises(ConfigurationError, match="mask of case a"):
            validate_for_train(run)

    def test_train_patch_divisibility(self, tmp_path):
        """Test that the crop size must suit the network depth."""
        run = parse_run_config(
            {
                "train": {"patch_size": [12, 12, 12]},
                "dataset": {"training": [{"image": "a.nii", "mask": "m.nii"}]},
            },
            tmp_path,
        )
        with pytest.raises(ConfigurationError, match="divisible"):
            validate_for_train(run)

    def test_predict_needs_checkpoint(self, tmp_path):
        """Test that a missing checkpoint is rejected before any work."""
        run = parse_run_config({"predict": {"inputs": ["."]}}, tmp_path)
        with pytest.raises(ConfigurationError, match="checkpoint"):
            validate_for_predict(run, tmp_path / "missing.ckpt")

    def test_predict_patch_divisibility(self, tmp_path):
        """Test that inference tiles must suit the network depth."""
        checkpoint = tmp_path / "model.ckpt"
        checkpoint.write_bytes(b"")
        run = parse_run_config(
            {"predict": {"inputs": ["."]}, "patching": {"patch_size": [20, 20, 20]}}, tmp_path
        )
        with pytest.raises(ConfigurationError, match="divisible"):
            validate_for_predict(run, checkpoint)


class TestCaseIdFromPath:
    """Tests for case_id_from_path."""

    def test_strips_nifti_suffix(self):
        """Test case ids from file names."""
        assert case_id_from_path(Path("dir/case_01.nii")) == "case_01"
        assert case_id_from_path(Path("notes.txt")) == "notes"
