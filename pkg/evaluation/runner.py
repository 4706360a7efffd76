"""
Benchmark runner: verifies every program of a corpus directory.
"""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Dict, List, Optional

from tqdm import tqdm

from evaluation.report import BenchmarkReport
from evaluation.results import BenchmarkResult, Expectation
from fpi.config import Config
from fpi.pipeline import VerificationPipeline

logger = logging.getLogger(__name__)


def discover(directory: str) -> List[Path]:
    """All program files below `directory`, in a stable order."""
    root = Path(directory)
    if not root.exists():
        raise FileNotFoundError(f"Directory not found: {root}")
    return sorted(root.rglob(f"*{Config.PROGRAM_SUFFIX}"))


def run_one(path: Path, settings: Optional[Dict[str, Any]] = None) -> BenchmarkResult:
    """Verify one program with its own solver session; never raises."""
    pipeline = VerificationPipeline(settings, verbose=False)
    try:
        result = pipeline.verify_file(str(path))
    except Exception as e:  # per-file isolation
        logger.exception("benchmark %s crashed", path)
        result = {"verdict": "Error", "error": f"{type(e).__name__}: {e}"}
    return BenchmarkResult.from_result(path, Expectation.for_program(path), result)


def run_benchmarks(directory: str, settings: Optional[Dict[str, Any]] = None,
                   jobs: Optional[int] = None, progress: bool = True) -> BenchmarkReport:
    """Verify every program under `directory` and compare with the sidecar verdicts."""
    paths = discover(directory)
    if not paths:
        raise ValueError(f"No {Config.PROGRAM_SUFFIX} files found in {directory}")
    jobs = jobs or Config.BENCH_JOBS
    logger.info("running %d benchmark(s) from %s with %d job(s)", len(paths), directory, jobs)

    results: List[BenchmarkResult] = []
    bar = tqdm(total=len(paths), desc="Verifying", unit="program", disable=not progress)
    if jobs <= 1:
        for path in paths:
            bar.set_postfix_str(path.stem)
            results.append(run_one(path, settings))
            bar.update(1)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(run_one, path, settings): path for path in paths}
            for future in as_completed(futures):
                results.append(future.result())
                bar.update(1)
    bar.close()

    results.sort(key=lambda r: (r.category, r.program))
    return BenchmarkReport(results)


__all__ = ["discover", "run_one", "run_benchmarks"]
