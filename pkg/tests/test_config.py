"""Tests for the flat key = value experiment configuration."""

import pytest

from alttrain.config import (
    ExperimentConfig,
    config_from_entries,
    load_config,
    parse_config_text,
    with_overrides,
)
from alttrain.model import LayerSpec

BASE_TEXT = """
# two-task desk experiment
dataset.size = 60
dataset.seed = 9
arch.trunk = relu:6,relu:6
arch.branch.1 = relu:6,softmax:4
arch.branch.2 = relu:6,linear:1
loss.kinds = categorical_cross_entropy,binary_cross_entropy_from_logits
optimizer.kind = sg
optimizer.epochs = 4
optimizer.batch_size = 8
schedule.kind = constant
schedule.start_lr = 1e-2
seeds = 1,2
output_dir = out
"""


def base_entries(**changes):
    entries = parse_config_text(BASE_TEXT)
    for key, value in changes.items():
        if value is None:
            entries.pop(key, None)
        else:
            entries[key] = value
    return entries


class TestParseConfigText:
    def test_comments_and_blanks_ignored(self):
        entries = parse_config_text("# note\n\n  \nseeds = 1\n")
        assert entries == {"seeds": "1"}

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            parse_config_text("seeds = 1\nseeds = 2\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown key"):
            parse_config_text("optimizer.momentum = 0.9\n")

    def test_missing_separator_rejected(self):
        with pytest.raises(ValueError, match="key = value"):
            parse_config_text("seeds 1,2\n")

    def test_empty_value_rejected(self):
        with pytest.raises(ValueError, match="key = value"):
            parse_config_text("seeds =\n")

    def test_branch_keys_accepted(self):
        entries = parse_config_text("arch.branch.3 = relu:4\n")
        assert entries["arch.branch.3"] == "relu:4"

    def test_branch_zero_is_unknown(self):
        with pytest.raises(ValueError, match="unknown key"):
            parse_config_text("arch.branch.0 = relu:4\n")


class TestConfigFromEntries:
    def test_base_config_parses(self):
        cfg = config_from_entries(base_entries())
        assert cfg.dataset_kind == "synthetic"
        assert cfg.dataset_size == 60
        assert cfg.split_ratios == (0.56, 0.14, 0.30)
        assert cfg.trunk == (("relu", 6), ("relu", 6))
        assert cfg.branches == ((("relu", 6), ("softmax", 4)), (("relu", 6), ("linear", 1)))
        assert cfg.optimizer_kinds == ("sg",)
        assert (cfg.shared_epochs, cfg.task_epochs) == (1, 1)
        assert cfg.seeds == (1, 2)
        assert cfg.start_rate == 1e-2

    def test_callback_defaults(self):
        cfg = config_from_entries(base_entries())
        cb = cfg.callbacks
        assert (cb.plateau_patience, cb.plateau_factor, cb.plateau_min_delta) == (50, 0.75, 1e-4)
        assert cb.early_stop_patience == 350

    @pytest.mark.parametrize(
        "key",
        [
            "arch.trunk",
            "arch.branch.1",
            "loss.kinds",
            "optimizer.kind",
            "optimizer.epochs",
            "optimizer.batch_size",
            "schedule.kind",
            "schedule.start_lr",
            "seeds",
            "output_dir",
            "dataset.size",
        ],
    )
    def test_missing_required_key_rejected(self, key):
        entries = base_entries(**{key: None})
        if key == "arch.branch.1":
            entries.pop("arch.branch.2", None)
            entries["loss.kinds"] = "mse"
        with pytest.raises(ValueError):
            config_from_entries(entries)

    def test_architecture_widths_chain_from_inputs(self):
        arch = config_from_entries(base_entries()).architecture()
        assert arch.trunk[0] == LayerSpec(2, 6, "relu")
        assert arch.trunk[1] == LayerSpec(6, 6, "relu")
        assert arch.branches[0][0] == LayerSpec(6, 6, "relu")
        assert arch.branches[0][1] == LayerSpec(6, 4, "softmax")
        assert arch.branches[1][1] == LayerSpec(6, 1, "linear")

    def test_losses_and_weights(self):
        cfg = config_from_entries(base_entries(**{"loss.weights": "2.0,0.5"}))
        losses = cfg.losses()
        assert losses.weights == (2.0, 0.5)

    def test_multiple_optimizer_kinds(self):
        cfg = config_from_entries(base_entries(**{"optimizer.kind": "sg,ate_sg_implemented"}))
        assert cfg.optimizer_kinds == ("sg", "ate_sg_implemented")

    def test_unknown_optimizer_kind_rejected(self):
        with pytest.raises(ValueError, match="optimizer"):
            config_from_entries(base_entries(**{"optimizer.kind": "adam"}))

    def test_duplicate_optimizer_kind_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            config_from_entries(base_entries(**{"optimizer.kind": "sg,sg"}))

    def test_bad_layer_items_rejected(self):
        for bad in ("tanh:4", "relu:x", "relu", "relu:0"):
            with pytest.raises(ValueError):
                config_from_entries(base_entries(**{"arch.trunk": bad}))

    def test_branch_numbering_must_be_consecutive(self):
        entries = base_entries(**{"arch.branch.2": None})
        entries["arch.branch.3"] = "relu:6,linear:1"
        with pytest.raises(ValueError, match="consecutive"):
            config_from_entries(entries)

    def test_loss_count_must_match_branch_count(self):
        with pytest.raises(ValueError, match="per branch"):
            config_from_entries(base_entries(**{"loss.kinds": "mse"}))

    def test_head_pairing_checked_eagerly(self):
        entries = base_entries(
            **{"loss.kinds": "binary_cross_entropy_from_logits,categorical_cross_entropy"}
        )
        with pytest.raises(ValueError):
            config_from_entries(entries)

    def test_power_decay_requires_power(self):
        with pytest.raises(ValueError):
            config_from_entries(base_entries(**{"schedule.kind": "power_decay"}))
        cfg = config_from_entries(
            base_entries(**{"schedule.kind": "power_decay", "schedule.power": "0.75"})
        )
        assert cfg.schedule().rate(1) == 1e-2 / 2.0**0.75

    def test_constant_rejects_power(self):
        with pytest.raises(ValueError):
            config_from_entries(base_entries(**{"schedule.power": "0.5"}))

    def test_plateau_driven_needs_plateau_callback(self):
        entries = base_entries(
            **{"schedule.kind": "plateau_driven", "callbacks.plateau_patience": "none"}
        )
        with pytest.raises(ValueError, match="plateau"):
            config_from_entries(entries)

    def test_disabled_plateau_rejects_leftover_settings(self):
        entries = base_entries(
            **{"callbacks.plateau_patience": "none", "callbacks.plateau_factor": "0.5"}
        )
        with pytest.raises(ValueError, match="disabled"):
            config_from_entries(entries)

    def test_disabled_early_stop(self):
        cfg = config_from_entries(base_entries(**{"callbacks.early_stop_patience": "none"}))
        assert cfg.callbacks.early_stop_patience is None

    def test_bad_seeds_rejected(self):
        with pytest.raises(ValueError, match="seeds"):
            config_from_entries(base_entries(seeds="1,two"))
        with pytest.raises(ValueError, match="distinct"):
            config_from_entries(base_entries(seeds="1,1"))

    def test_split_ratio_validation(self):
        with pytest.raises(ValueError, match="sum to 1"):
            config_from_entries(base_entries(**{"split.ratios": "0.5,0.4,0.2"}))
        with pytest.raises(ValueError, match="three"):
            config_from_entries(base_entries(**{"split.ratios": "0.5,0.5"}))

    def test_csv_dataset_needs_path(self):
        with pytest.raises(ValueError, match="dataset.path"):
            config_from_entries(base_entries(**{"dataset.kind": "csv", "dataset.size": None}))
        entries = base_entries(**{"dataset.kind": "csv", "dataset.path": "points.csv"})
        cfg = config_from_entries(entries)
        assert cfg.dataset_path == "points.csv"


class TestOverridesAndLoading:
    def test_with_overrides_replaces_fields(self):
        cfg = config_from_entries(base_entries())
        out = with_overrides(cfg, seeds=(7,), optimizer_kinds=("ate_sg",), output_dir="elsewhere")
        assert out.seeds == (7,)
        assert out.optimizer_kinds == ("ate_sg",)
        assert out.output_dir == "elsewhere"
        assert cfg.seeds == (1, 2)

    def test_with_overrides_keeps_validation(self):
        cfg = config_from_entries(base_entries())
        with pytest.raises(ValueError):
            with_overrides(cfg, optimizer_kinds=("adam",))

    def test_no_overrides_returns_same_config(self):
        cfg = config_from_entries(base_entries())
        assert with_overrides(cfg) is cfg

    def test_load_config_reads_file(self, tmp_path):
        path = tmp_path / "experiment.cfg"
        path.write_text(BASE_TEXT, encoding="utf-8")
        cfg = load_config(path)
        assert isinstance(cfg, ExperimentConfig)
        assert cfg.dataset_size == 60
