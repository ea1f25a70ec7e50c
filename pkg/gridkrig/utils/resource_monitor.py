"""
Resource monitoring utilities
进程资源快照 - 记录实验运行的内存与CPU占用
"""

import logging
import time
from typing import Dict

import psutil

from gridkrig.core.config import settings

logger = logging.getLogger(__name__)


class ResourceMonitor:
    """Snapshots of the current process's memory and CPU use"""

    def __init__(self):
        self._process = psutil.Process()
        self._started = time.monotonic()
        # prime cpu_percent so the next call measures since construction
        self._process.cpu_percent(interval=None)

    def get_current_usage(self) -> Dict[str, float]:
        try:
            memory_mb = self._process.memory_info().rss / 1024 / 1024
            return {
                "memory_mb": memory_mb,
                "cpu_percent": self._process.cpu_percent(interval=None),
                "threads": float(self._process.num_threads()),
                "workers": float(settings.worker_count),
                "elapsed_s": time.monotonic() - self._started,
            }
        except psutil.Error as e:
            logger.error(f"Failed to get resource usage: {e}")
            return {"memory_mb": 0.0, "cpu_percent": 0.0, "threads": 0.0,
                    "workers": float(settings.worker_count), "elapsed_s": time.monotonic() - self._started}

    def log_snapshot(self, label: str) -> Dict[str, float]:
        usage = self.get_current_usage()
        logger.info(
            f"Resource usage after {label} - Memory: {usage['memory_mb']:.1f}MB, "
            f"CPU: {usage['cpu_percent']:.1f}%, threads: {usage['threads']:.0f}, "
            f"elapsed: {usage['elapsed_s']:.1f}s"
        )
        return usage


# Global resource monitor instance
resource_monitor = ResourceMonitor()
