"""Timing and memory logging for the heavy numerical steps."""

import functools
import time
from typing import Any, Callable

from config import logger


def timeit(func: Callable) -> Callable:
    """Decorator to log how long a call took, or how long it ran before failing."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> Any:
        start_time = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            execution_time = time.perf_counter() - start_time
            logger.error(f"{func.__name__} failed after {execution_time:.2f} seconds: {e}")
            raise
        execution_time = time.perf_counter() - start_time
        logger.info(f"{func.__name__} completed in {execution_time:.2f} seconds")
        return result

    return wrapper


class PerformanceMonitor:
    """Context manager timing one command or pipeline stage."""

    def __init__(self, operation_name: str):
        self.operation_name = operation_name
        self.start_time = None
        self.duration = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        logger.info(f"Starting {self.operation_name}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.duration = time.perf_counter() - self.start_time
        if exc_type is None:
            logger.info(f"{self.operation_name} completed in {self.duration:.2f} seconds")
        else:
            logger.error(f"{self.operation_name} failed after {self.duration:.2f} seconds")
        log_memory_usage(self.operation_name)


def log_memory_usage(label: str = "") -> None:
    """Log current memory usage if psutil is available."""
    try:
        import os

        import psutil

        process = psutil.Process(os.getpid())
        memory_mb = process.memory_info().rss / 1024 / 1024
        logger.debug(f"Memory usage{f' after {label}' if label else ''}: {memory_mb:.1f} MB")
    except ImportError:
        logger.debug("psutil not available for memory monitoring")
    except Exception as e:
        logger.debug(f"Error checking memory usage: {e}")
