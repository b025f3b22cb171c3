from __future__ import annotations

import logging

from pathlib import Path

LOG_FORMAT = '%(asctime)s | %(levelname)s | %(name)s | %(message)s'

# Third-party loggers that stay at WARNING even with --debug.
QUIET_LOGGERS: tuple[str, ...] = ('matplotlib', 'matplotlib.font_manager', 'PIL', 'z3')


def configure_logging(debug: bool = False, log_file: str | Path | None = None) -> None:
    """
    Configure logging for a CLI run.

    Analysis loggers under ``ballpark`` log at DEBUG or INFO; everything else
    stays at WARNING so plotting and solver internals do not drown the
    per-write output. Repeated calls replace the previous handlers.

    Args:
        debug: If True, ``ballpark`` loggers emit DEBUG records.
        log_file: Optional file for logs; stderr when None.
    """
    handler: logging.Handler
    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(path, encoding='utf-8')
    else:
        handler = logging.StreamHandler()

    logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT, handlers=[handler], force=True)
    logging.getLogger('ballpark').setLevel(logging.DEBUG if debug else logging.INFO)
    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
