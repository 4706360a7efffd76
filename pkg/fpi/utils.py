"""
Utility functions for the verifier
"""

import json
import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Optional

from fpi.config import Config


def setup_logging(level: Optional[str] = None):
    """Configure root logging once from Config."""
    logging.basicConfig(
        level=getattr(logging, (level or Config.LOG_LEVEL).upper(), logging.INFO),
        format=Config.LOG_FORMAT,
    )


def save_json(data: Dict[str, Any], file_path: str) -> bool:
    """Save data as JSON file."""
    try:
        file_path = Path(file_path)
        file_path.parent.mkdir(parents=True, exist_ok=True)

        with open(file_path, 'w', encoding='utf-8') as f:
            json.dump(data, f, indent=2, ensure_ascii=False)

        return True
    except (OSError, TypeError) as e:
        logging.getLogger(__name__).error("Error saving JSON %s: %s", file_path, e)
        return False


def load_json(file_path: str) -> Dict[str, Any]:
    """Load data from JSON file."""
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logging.getLogger(__name__).error("Error loading JSON %s: %s", file_path, e)
        return {}


class StageTimer:
    """Accumulates wall-clock time per named stage."""

    def __init__(self):
        self.timings: Dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        started = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - started

    def as_dict(self) -> Dict[str, float]:
        return {name: round(seconds, 4) for name, seconds in self.timings.items()}


def fresh_name(base: str, taken: Iterable[str]) -> str:
    """Smallest `base<k>` (k >= 1) not in `taken`."""
    taken = set(taken)
    k = 1
    while f"{base}{k}" in taken:
        k += 1
    return f"{base}{k}"
