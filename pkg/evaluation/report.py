"""
Benchmark report: summary table, CSV and JSON output.
"""

import json
import os
import platform
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
import pandas as pd
import psutil

from evaluation.results import BenchmarkResult

TABLE_COLUMNS = ["category", "program", "expected", "verdict", "passed", "rounds", "depth", "seconds"]


def host_info() -> Dict[str, Any]:
    """Machine the benchmarks ran on."""
    return {
        "platform": platform.platform(),
        "python_version": platform.python_version(),
        "cpu_count": psutil.cpu_count(),
        "memory_total": psutil.virtual_memory().total,
        "memory_available": psutil.virtual_memory().available,
        "disk_usage": psutil.disk_usage('/').percent if os.name != 'nt' else psutil.disk_usage('C:').percent,
    }


class BenchmarkReport:
    def __init__(self, results: List[BenchmarkResult]):
        self.results = results
        self.frame = pd.DataFrame([r.to_row() for r in results])
        if self.frame.empty:
            self.frame = pd.DataFrame(columns=TABLE_COLUMNS)

    @property
    def all_passed(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    def failures(self) -> List[BenchmarkResult]:
        return [r for r in self.results if not r.passed]

    def summary(self) -> Dict[str, Any]:
        seconds = np.array([r.seconds for r in self.results], dtype=float)
        timing = {}
        if seconds.size:
            timing = {
                "total": round(float(seconds.sum()), 3),
                "mean": round(float(seconds.mean()), 3),
                "median": round(float(np.median(seconds)), 3),
                "p95": round(float(np.percentile(seconds, 95)), 3),
                "max": round(float(seconds.max()), 3),
            }
        verdicts = self.frame["verdict"].value_counts().to_dict() if not self.frame.empty else {}
        return {
            "programs": len(self.results),
            "passed": sum(r.passed for r in self.results),
            "failed": len(self.failures()),
            "verdicts": {str(k): int(v) for k, v in verdicts.items()},
            "seconds": timing,
            "stage_seconds": self.stage_totals(),
            "host": host_info(),
        }

    def stage_totals(self) -> Dict[str, float]:
        stages = [c for c in self.frame.columns if str(c).startswith("t_")]
        return {c[2:]: round(float(np.nansum(self.frame[c].to_numpy(dtype=float))), 3) for c in stages}

    def to_table(self) -> str:
        table = self.frame[TABLE_COLUMNS].to_string(index=False) if not self.frame.empty else "(no programs)"
        summary = self.summary()
        lines = [
            table,
            "",
            f"Programs: {summary['programs']}  passed: {summary['passed']}  failed: {summary['failed']}",
        ]
        if summary["seconds"]:
            s = summary["seconds"]
            lines.append(f"Time: total {s['total']}s  mean {s['mean']}s  median {s['median']}s  max {s['max']}s")
        for r in self.failures():
            lines.append(f"  FAIL {r.category}/{r.program}: expected {r.expected}, got {r.verdict}"
                         + (f" ({r.error})" if r.error else ""))
        return "\n".join(lines)

    def save(self, output_dir: str, stem: str = "bench") -> Dict[str, str]:
        """Write `<stem>.csv` and `<stem>.json`; returns their paths."""
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{stem}.csv"
        json_path = out / f"{stem}.json"
        self.frame.to_csv(csv_path, index=False)
        with open(json_path, 'w', encoding='utf-8') as f:
            json.dump({"summary": self.summary(), "results": [r.to_row() for r in self.results]},
                      f, indent=2, ensure_ascii=False)
        return {"csv": str(csv_path), "json": str(json_path)}


__all__ = ["BenchmarkReport", "host_info", "TABLE_COLUMNS"]
