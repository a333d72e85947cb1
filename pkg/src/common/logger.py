"""Logging utilities with rich output for the femur-seg command line.

This module combines Python's standard logging with rich console output.
Every package obtains its logger here so that training progress, inference
timing and evaluation summaries render consistently.

Usage:
    from common.logger import get_logger

    logger = get_logger(__name__)
    logger.info("Epoch 3/300 loss=0.412")
    logger.warning("Empty prediction for case_007_left")
    logger.error("Failed to read volume", exc_info=True)
"""

import logging
import sys

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from common.env import env

# Global console instance for consistent output
console = Console()

# Names of loggers created through get_logger
_configured: set[str] = set()


def _rich_handler(show_time: bool = False, show_path: bool = False) -> RichHandler:
    return RichHandler(
        console=console,
        show_time=show_time,
        show_path=show_path,
        rich_tracebacks=True,
        tracebacks_show_locals=False,  # ndarray locals flood the terminal
        markup=True,
    )


def get_logger(
    name: str,
    level: str | None = None,
    show_time: bool = False,
    show_path: bool = False,
) -> logging.Logger:
    """Get a configured logger with rich output.

    Args:
        name: Logger name (typically __name__ of the module)
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL).
               If None, uses environment variable LOG_LEVEL or defaults to INFO.
        show_time: Show timestamp in log output (default: False for clean CLI)
        show_path: Show file path in log output (default: False for clean CLI)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    # Avoid adding multiple handlers if logger already configured
    if logger.handlers:
        return logger

    logger.setLevel((level or env.log_level()).upper())

    rich_handler = _rich_handler(show_time, show_path)
    rich_handler.setFormatter(logging.Formatter(fmt="%(message)s", datefmt="[%X]"))
    logger.addHandler(rich_handler)
    _configured.add(name)

    # Propagate so pytest caplog sees the records
    logger.propagate = True

    return logger


def setup_logging(level: str | None = None, log_file: str | None = None) -> None:
    """Configure logging once at the CLI entry point.

    Console output stays with the per-module rich handlers; the root logger
    only carries the optional file handler, so records are not printed twice.

    Args:
        level: Logging level for every toolkit logger; LOG_LEVEL or INFO if None
        log_file: Optional file path to also log to a file (training runs
                  keep their own log next to the checkpoints)
    """
    level = (level or env.log_level()).upper()

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()
    for name in _configured:
        logging.getLogger(name).setLevel(level)

    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(
            logging.Formatter(
                fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
                datefmt="%Y-%m-%d %H:%M:%S",
            )
        )
        root_logger.addHandler(file_handler)


def progress(message: str) -> None:
    """Print a progress line without the logger prefix."""
    console.print(message)


def success(message: str) -> None:
    """Print a success message with a green checkmark."""
    console.print(f"[green]✓[/green] {message}")


def warning(message: str) -> None:
    """Print a warning message with a yellow warning icon."""
    console.print(f"[yellow]⚠[/yellow] {message}")


def error(message: str) -> None:
    """Print an error message with a red X on stderr."""
    Console(file=sys.stderr).print(f"[red]✗[/red] {message}")


def print_table(title: str, columns: list[str], rows: list[list[str]]) -> None:
    """Render a small table (cohort summaries, timing reports) on the console.

    Args:
        title: Table caption
        columns: Header labels
        rows: Pre-formatted cell values
    """
    table = Table(title=title)
    for column in columns:
        table.add_column(column, justify="right" if column != columns[0] else "left")
    for row in rows:
        table.add_row(*row)
    console.print(table)
