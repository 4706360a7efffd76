"""
Evaluation Module
-----------------
Benchmark corpus runs and verdict reports.
"""

from .report import BenchmarkReport
from .runner import run_benchmarks

__all__ = ["BenchmarkReport", "run_benchmarks"]
