"""
Logging for kg-path-forge.

All modules log through ``get_logger(__name__)``, which places them under
the ``kgpf`` namespace. The CLI calls ``setup_logging`` once per invocation:

- console handler on stderr (stdout is reserved for ``--json-output``),
  colored when the terminal allows it
- optional rotating DEBUG file handler for ``--log-file``

``KGPF_LOG_LEVEL`` sets the default console level.
"""

import logging
import logging.config
import os
import sys
from pathlib import Path
from typing import Any, ClassVar

LOGGER_NAMESPACE = "kgpf"
LOG_LEVEL_ENV = "KGPF_LOG_LEVEL"

CONSOLE_FORMAT = "%(asctime)s | %(levelname)-7s | %(message)s"
FILE_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)-28s | %(filename)s:%(lineno)d | %(message)s"

LOG_FILE_MAX_BYTES = 10 * 1024 * 1024
LOG_FILE_BACKUPS = 3


def color_enabled(stream: Any = None) -> bool:
    """True when *stream* (default stderr) is a color-capable terminal."""
    stream = stream if stream is not None else sys.stderr
    if os.getenv("NO_COLOR") or os.getenv("TERM", "").lower() == "dumb":
        return False
    return bool(getattr(stream, "isatty", lambda: False)())


class ColoredFormatter(logging.Formatter):
    """Wraps the level name in an ANSI color."""

    COLORS: ClassVar[dict[int, str]] = {
        logging.DEBUG: "\033[38;2;99;102;106m",
        logging.INFO: "\033[38;2;0;122;134m",
        logging.WARNING: "\033[38;2;255;198;0m",
        logging.ERROR: "\033[38;2;186;12;47m",
        logging.CRITICAL: "\033[1;38;2;186;12;47m",
    }
    RESET = "\033[0m"

    def __init__(
        self, fmt: str | None = None, datefmt: str | None = None, *, use_colors: bool | None = None
    ) -> None:
        super().__init__(fmt=fmt, datefmt=datefmt)
        self.use_colors = color_enabled() if use_colors is None else use_colors

    def format(self, record: logging.LogRecord) -> str:
        color = self.COLORS.get(record.levelno) if self.use_colors else None
        if color is None:
            return super().format(record)
        # copy so other handlers see the plain level name
        record = logging.makeLogRecord(record.__dict__)
        record.levelname = f"{color}{record.levelname}{self.RESET}"
        return super().format(record)


def resolve_level(log_level: str | None) -> int:
    """Map a level name (or the env default) to a logging constant; unknown names mean INFO."""
    name = (log_level or os.getenv(LOG_LEVEL_ENV) or "INFO").upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def build_logging_config(
    log_level: str | None = None, log_file: str | Path | None = None
) -> dict[str, Any]:
    """The ``dictConfig`` mapping used by ``setup_logging``."""
    console_level = resolve_level(log_level)
    handlers: dict[str, dict[str, Any]] = {
        "console": {
            "class": "logging.StreamHandler",
            "level": console_level,
            "formatter": "console",
            "stream": "ext://sys.stderr",
        }
    }
    if log_file:
        handlers["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": logging.DEBUG,
            "formatter": "file",
            "filename": str(log_file),
            "maxBytes": LOG_FILE_MAX_BYTES,
            "backupCount": LOG_FILE_BACKUPS,
            "encoding": "utf-8",
        }

    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "console": {"()": ColoredFormatter, "format": CONSOLE_FORMAT, "datefmt": "%H:%M:%S"},
            "file": {"format": FILE_FORMAT, "datefmt": "%Y-%m-%d %H:%M:%S"},
        },
        "handlers": handlers,
        "loggers": {
            LOGGER_NAMESPACE: {
                "handlers": list(handlers),
                "level": logging.DEBUG if log_file else console_level,
                "propagate": False,
            },
        },
    }


def setup_logging(log_level: str | None = None, log_file: str | Path | None = None) -> None:
    """
    Configure the ``kgpf`` logger tree.

    Args:
        log_level: Console level name; defaults to ``KGPF_LOG_LEVEL`` or INFO.
        log_file: Optional file receiving every record at DEBUG.
    """
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
    logging.config.dictConfig(build_logging_config(log_level, log_file))


def get_logger(name: str) -> logging.Logger:
    """
    Returns a logger under the ``kgpf`` namespace.

    ``src.pipeline.core.path_engine`` becomes ``kgpf.core.path_engine``.
    """
    short = name.removeprefix("src.").removeprefix("pipeline.")
    return logging.getLogger(f"{LOGGER_NAMESPACE}.{short}")
