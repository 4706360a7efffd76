"""
Benchmark results and expected-verdict sidecars
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from fpi.config import Config
from fpi.utils import load_json


@dataclass
class Expectation:
    """Contents of a `<program>.expected.json` sidecar."""
    verdict: str
    reason: Optional[str] = None

    @classmethod
    def for_program(cls, program: Path) -> Optional["Expectation"]:
        sidecar = program.with_name(program.name[: -len(Config.PROGRAM_SUFFIX)] + Config.EXPECTED_SUFFIX)
        if not sidecar.exists():
            return None
        data = load_json(str(sidecar))
        if "verdict" not in data:
            return None
        return cls(data["verdict"], data.get("reason"))

    def label(self) -> str:
        return f"{self.verdict}({self.reason})" if self.reason else self.verdict

    def matches(self, result: Dict[str, Any]) -> bool:
        if result.get("verdict") != self.verdict:
            return False
        return self.reason is None or result.get("reason") == self.reason


@dataclass
class BenchmarkResult:
    """Outcome of one corpus program."""
    program: str
    category: str
    expected: str
    verdict: str
    passed: bool
    seconds: float
    rounds: int = 0
    depth: int = 0
    oracle_violations: int = 0
    error: str = ""
    timings: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_result(cls, path: Path, expectation: Optional[Expectation],
                    result: Dict[str, Any]) -> "BenchmarkResult":
        label = result.get("verdict", "Error")
        if result.get("reason"):
            label = f"{label}({result['reason']})"
        violations = len(result.get("oracle", {}).get("violations", []))
        passed = expectation is not None and expectation.matches(result) and violations == 0
        return cls(
            program=path.stem,
            category=path.parent.name,
            expected=expectation.label() if expectation else "",
            verdict=label,
            passed=passed,
            seconds=float(result.get("seconds", 0.0)),
            rounds=int(result.get("rounds", 0)),
            depth=int(result.get("depth", 0)),
            oracle_violations=violations,
            error=result.get("error", ""),
            timings=dict(result.get("timings", {})),
        )

    def to_row(self) -> Dict[str, Any]:
        row = asdict(self)
        timings = row.pop("timings")
        row.update({f"t_{stage}": seconds for stage, seconds in timings.items()})
        return row
