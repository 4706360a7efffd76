"""
Configuration Module
-------------------
Centralized configuration and environment variable management.
"""

import os
import shutil
from datetime import datetime
from pathlib import Path
from typing import List, Dict, Any
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Project root directory
PROJECT_ROOT = Path(__file__).parent.parent


class Config:
    """Verifier configuration."""

    # Base paths
    BASE_DIR = PROJECT_ROOT
    DATA_DIR = BASE_DIR / "data"
    CORPUS_DIR = BASE_DIR / "corpus"
    RUNS_DIR = DATA_DIR / "runs"
    RESULTS_DIR = DATA_DIR / "results"

    # Solver settings
    SOLVER_PATH = os.getenv("FPI_SOLVER")
    SOLVER_TIMEOUT_MS = int(os.getenv("FPI_TIMEOUT_MS", 10000))

    # Induction settings
    BASE_BOUND = int(os.getenv("FPI_BASE_BOUND", 1))
    MAX_BASE_BOUND = 4
    MAX_ROUNDS = int(os.getenv("FPI_MAX_ROUNDS", 8))
    MAX_DEPTH = int(os.getenv("FPI_MAX_DEPTH", 8))
    MAX_DECOMPOSITIONS = int(os.getenv("FPI_MAX_DECOMPOSITIONS", 64))

    # Every solver script of a run is kept under RUNS_DIR unless disabled
    KEEP_RUNS = os.getenv("FPI_KEEP_RUNS", "true").lower() in ("1", "true", "yes")

    # Benchmark settings
    BENCH_JOBS = int(os.getenv("FPI_JOBS", 1))
    PROGRAM_SUFFIX = ".fpi"
    EXPECTED_SUFFIX = ".expected.json"

    # Logging configuration
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    @classmethod
    def ensure_directories(cls):
        """Ensure all required directories exist."""
        directories = [
            cls.DATA_DIR,
            cls.RUNS_DIR,
            cls.RESULTS_DIR,
        ]

        for directory in directories:
            directory.mkdir(parents=True, exist_ok=True)

    @classmethod
    def run_directory(cls, name: str = "run") -> Path:
        """Fresh timestamped directory under RUNS_DIR for one run's solver scripts."""
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S-%f")
        slug = "".join(c if c.isalnum() or c in "-_" else "_" for c in name) or "run"
        return cls.RUNS_DIR / f"{stamp}_{slug}"

    @classmethod
    def validate_config(cls) -> List[str]:
        """Validate configuration settings."""
        errors = []

        if not 1 <= cls.BASE_BOUND <= cls.MAX_BASE_BOUND:
            errors.append(f"FPI_BASE_BOUND must be in 1..{cls.MAX_BASE_BOUND}, got {cls.BASE_BOUND}")
        if cls.SOLVER_TIMEOUT_MS <= 0:
            errors.append("FPI_TIMEOUT_MS must be positive")
        if cls.MAX_ROUNDS < 1 or cls.MAX_DEPTH < 0:
            errors.append("FPI_MAX_ROUNDS must be >= 1 and FPI_MAX_DEPTH >= 0")
        if cls.SOLVER_PATH and not (Path(cls.SOLVER_PATH).exists() or shutil.which(cls.SOLVER_PATH)):
            errors.append(f"FPI_SOLVER not found: {cls.SOLVER_PATH}")

        return errors

    @classmethod
    def verifier_settings(cls) -> Dict[str, Any]:
        """Settings consumed by the verification engine."""
        return {
            "solver_path": cls.SOLVER_PATH,
            "timeout_ms": cls.SOLVER_TIMEOUT_MS,
            "base_bound": cls.BASE_BOUND,
            "max_rounds": cls.MAX_ROUNDS,
            "max_depth": cls.MAX_DEPTH,
            "max_decompositions": cls.MAX_DECOMPOSITIONS,
            "keep_runs": cls.KEEP_RUNS,
        }

    @classmethod
    def get_config_summary(cls) -> Dict[str, Any]:
        """Get a summary of current configuration."""
        return {
            "project_root": str(cls.BASE_DIR),
            "corpus_dir": str(cls.CORPUS_DIR),
            "solver": cls.SOLVER_PATH or "z3 (in-process)",
            "timeout_ms": cls.SOLVER_TIMEOUT_MS,
            "base_bound": cls.BASE_BOUND,
            "log_level": cls.LOG_LEVEL,
        }

