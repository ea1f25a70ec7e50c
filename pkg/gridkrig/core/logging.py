"""
Logging setup
日志配置 - 控制台输出，可选文件输出
"""

import logging
import os
from typing import Optional

from gridkrig.core.config import settings


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """Configure root logging for command-line runs"""
    log_level = getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO)
    handlers: list = [logging.StreamHandler()]

    log_file = log_file or settings.LOG_FILE
    if log_file:
        log_dir = os.path.dirname(os.path.abspath(log_file))
        os.makedirs(log_dir, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    logging.basicConfig(level=log_level, format=settings.LOG_FORMAT, handlers=handlers, force=True)
