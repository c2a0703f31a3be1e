"""Configuration parsing: full-file fidelity, defaults, and error cases."""
import pytest

from seqforge.config import Config, parse_config
from seqforge.errors import (
    ConfigRangeError,
    ConfigTypeError,
    MissingRequiredKey,
)

# The reference configuration file, including its trailing whitespace.
FULL_CONFIG = """\
[dataset]
dataset_folder               = dat/conll

[character_lstm]
using_character_lstm         = True
char_embedding_dimension     = 25
char_lstm_dimension          = 50

[token_lstm]
token_emb_pretrained_file    = glove.txt
token_embedding_dimension    = 200
token_lstm_dimension         = 300

[crf]
using_crf                    = True
random_initial_transitions   = True

[training]
dropout                      = 0.5
patience                     = 10
maximum_number_of_epochs     = 100
maximum_training_time        = 10
number_of_cpu_threads        = 8
"""


class TestParseConfig:
    def test_full_file_values(self):
        cfg = parse_config(FULL_CONFIG)
        assert cfg.dataset_folder == "dat/conll"
        assert cfg.using_character_lstm is True
        assert cfg.char_embedding_dimension == 25
        assert cfg.char_lstm_dimension == 50
        assert cfg.token_emb_pretrained_file == "glove.txt"
        assert cfg.token_embedding_dimension == 200
        assert cfg.token_lstm_dimension == 300
        assert cfg.using_crf is True
        assert cfg.random_initial_transitions is True
        assert cfg.dropout == 0.5
        assert cfg.patience == 10
        assert cfg.maximum_number_of_epochs == 100
        assert cfg.maximum_training_time == 10.0
        assert cfg.number_of_cpu_threads == 8

    def test_defaults_fill_absent_keys(self):
        cfg = parse_config("[dataset]\ndataset_folder = data\n")
        assert cfg == Config(dataset_folder="data")
        assert cfg.learning_rate == 0.005
        assert cfg.gradient_clip == 5.0
        assert cfg.tagging_format == "bio"
        assert cfg.seed == 42
        assert cfg.vocab_only_embedded is False

    def test_empty_file_missing_required(self):
        with pytest.raises(MissingRequiredKey):
            parse_config("")

    def test_dropout_range(self):
        with pytest.raises(ConfigRangeError):
            parse_config("[t]\ndataset_folder = d\ndropout = 1.5\n")

    def test_type_error(self):
        with pytest.raises(ConfigTypeError):
            parse_config("[t]\ndataset_folder = d\npatience = soon\n")

    def test_bool_type_error(self):
        with pytest.raises(ConfigTypeError):
            parse_config("[t]\ndataset_folder = d\nusing_crf = maybe\n")

    def test_unknown_keys_warn_not_fail(self, caplog):
        import logging
        with caplog.at_level(logging.WARNING, logger="seqforge.config"):
            cfg = parse_config(
                "[t]\ndataset_folder = d\nmain_gpu = 0\n")
        assert cfg.dataset_folder == "d"
        assert any("main_gpu" in r.message for r in caplog.records)

    def test_comments_and_sections_are_decorative(self):
        cfg = parse_config(
            "# top comment\n[anything]\ndataset_folder = d ; inline\n"
            "[other]\npatience = 3\n")
        assert cfg.dataset_folder == "d"
        assert cfg.patience == 3

    def test_negative_dimension_rejected(self):
        with pytest.raises(ConfigRangeError):
            parse_config("[t]\ndataset_folder = d\nchar_lstm_dimension = -1\n")

    def test_tagging_format_validated(self):
        with pytest.raises(ConfigRangeError):
            parse_config("[t]\ndataset_folder = d\ntagging_format = iob9\n")
        cfg = parse_config("[t]\ndataset_folder = d\ntagging_format = BIOES\n")
        assert cfg.tagging_format == "bioes"

    def test_roundtrip_through_dict(self):
        cfg = parse_config(FULL_CONFIG)
        assert Config.from_dict(cfg.to_dict()) == cfg
