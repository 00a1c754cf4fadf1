import logging
import os

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level=None):
    """
    Installs one stream handler on the root logger.
    Level precedence: explicit argument, then WILLMORE_LOG_LEVEL, then INFO.
    """
    level = level or os.environ.get("WILLMORE_LOG_LEVEL", "INFO")
    root = logging.getLogger()
    if not any(getattr(h, "_willmore", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._willmore = True
        root.addHandler(handler)
    root.setLevel(str(level).upper())
    return root
