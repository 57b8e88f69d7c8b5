"""Tests for the kgpf logging setup."""

import io
import logging
import os
from unittest.mock import patch

from src.pipeline.logging.logging_config import (
    LOGGER_NAMESPACE,
    ColoredFormatter,
    build_logging_config,
    color_enabled,
    get_logger,
    resolve_level,
    setup_logging,
)


class TestLoggingConfig:
    def test_get_logger_namespace(self):
        assert get_logger("src.pipeline.core.path_engine").name == "kgpf.core.path_engine"
        assert get_logger("tests.x").name == "kgpf.tests.x"

    def test_resolve_level(self):
        assert resolve_level("debug") == logging.DEBUG
        assert resolve_level("nonsense") == logging.INFO

    @patch.dict(os.environ, {"KGPF_LOG_LEVEL": "ERROR"})
    def test_level_from_environment(self):
        assert resolve_level(None) == logging.ERROR
        assert resolve_level("WARNING") == logging.WARNING

    def test_console_only_by_default(self):
        config = build_logging_config("INFO")
        assert set(config["handlers"]) == {"console"}
        assert config["handlers"]["console"]["stream"] == "ext://sys.stderr"
        assert config["loggers"][LOGGER_NAMESPACE]["level"] == logging.INFO

    def test_log_file_adds_debug_handler(self, tmp_path):
        config = build_logging_config("WARNING", tmp_path / "run.log")
        assert config["handlers"]["file"]["level"] == logging.DEBUG
        assert config["loggers"][LOGGER_NAMESPACE]["level"] == logging.DEBUG
        assert config["handlers"]["console"]["level"] == logging.WARNING

    def test_setup_writes_log_file(self, tmp_path):
        log_file = tmp_path / "logs" / "run.log"
        setup_logging("WARNING", log_file)
        get_logger("src.pipeline.core.pipeline").debug("paths built")
        for handler in logging.getLogger(LOGGER_NAMESPACE).handlers:
            handler.flush()
        assert "paths built" in log_file.read_text()
        setup_logging("WARNING")


class TestColoredFormatter:
    def _record(self, level: int) -> logging.LogRecord:
        return logging.LogRecord("kgpf.t", level, __file__, 1, "hello", None, None)

    def test_plain_when_colors_off(self):
        formatter = ColoredFormatter("%(levelname)s %(message)s", use_colors=False)
        assert formatter.format(self._record(logging.INFO)) == "INFO hello"

    def test_colored_level_does_not_leak(self):
        formatter = ColoredFormatter("%(levelname)s", use_colors=True)
        record = self._record(logging.ERROR)
        text = formatter.format(record)
        assert text.startswith("\033[") and "ERROR" in text
        assert record.levelname == "ERROR"

    def test_non_tty_has_no_color(self):
        assert color_enabled(io.StringIO()) is False

    @patch.dict(os.environ, {"NO_COLOR": "1"})
    def test_no_color_env(self):
        class Tty(io.StringIO):
            def isatty(self):
                return True

        assert color_enabled(Tty()) is False
