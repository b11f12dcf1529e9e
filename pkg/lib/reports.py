"""Report containers returned by checks, probes and synthesis.

Each report converts itself to JSON-ready data with ``to_dict()``. Reports
that the CLI re-reads also provide ``from_dict()``.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Convert numpy data and report objects into plain JSON types."""
    if value is None or isinstance(value, (bool, str)):
        return value
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if np.isnan(f) or np.isinf(f):
            return None
        return f
    if isinstance(value, int):
        return value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def _controller_from_json(data):
    if data is None:
        return None
    if isinstance(data, dict):
        from lib.fir_core import FirTransferMatrix

        return FirTransferMatrix.from_dict(data)
    return np.asarray(data, dtype=float)


@dataclass
class QiReport:
    """Verdict of a quadratic-invariance test with an optional witness."""

    qi: bool
    witness_controller: Any = None
    witness_residual: float = 0.0
    witness_indices: Optional[Tuple[int, ...]] = None
    method: str = "static"
    tol: float = 0.0
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "qi": bool(self.qi),
            "method": self.method,
            "tol": self.tol,
            "witness_residual": to_jsonable(self.witness_residual),
            "witness_indices": to_jsonable(self.witness_indices),
            "witness_controller": to_jsonable(self.witness_controller),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "QiReport":
        indices = data.get("witness_indices")
        return cls(
            qi=bool(data["qi"]),
            witness_controller=_controller_from_json(data.get("witness_controller")),
            witness_residual=float(data.get("witness_residual") or 0.0),
            witness_indices=tuple(indices) if indices is not None else None,
            method=data.get("method", "static"),
            tol=float(data.get("tol", 0.0)),
            notes=list(data.get("notes", [])),
        )


@dataclass
class InertnessReport:
    inert: bool
    level: str
    max_radius: float
    margin: float
    basis_radii: List[float] = field(default_factory=list)
    sampled_count: int = 0
    offending: Optional[Dict[str, Any]] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {
                "inert": self.inert,
                "level": self.level,
                "max_radius": self.max_radius,
                "margin": self.margin,
                "basis_radii": self.basis_radii,
                "sampled_count": self.sampled_count,
                "offending": self.offending,
                "notes": self.notes,
            }
        )


@dataclass
class AssumptionReport:
    """Rank and invertibility verdicts for the plant blocks P12 and P21.

    Booleans are derived from the relative smallest singular values stored
    alongside them (threshold ``tol``).
    """

    p12_left_invertible: bool
    p21_right_invertible: bool
    d12_full_column_rank: bool
    d21_full_row_rank: bool
    p12_min_singular: float
    p21_min_singular: float
    tol: float
    frequency_samples: Dict[str, List[Tuple[float, float]]] = field(
        default_factory=dict
    )

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {
                "p12_left_invertible": self.p12_left_invertible,
                "p21_right_invertible": self.p21_right_invertible,
                "d12_full_column_rank": self.d12_full_column_rank,
                "d21_full_row_rank": self.d21_full_row_rank,
                "p12_min_singular": self.p12_min_singular,
                "p21_min_singular": self.p21_min_singular,
                "tol": self.tol,
                "frequency_samples": self.frequency_samples,
            }
        )


@dataclass
class SynthesisResult:
    q_opt: Any
    objective: float
    controller: Any
    q_membership_residual: float
    controller_membership_residual: float
    normal_equation_residual: float
    coefficients: np.ndarray
    horizon: int
    rank: int
    qi_report: Optional[QiReport] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "objective": to_jsonable(self.objective),
            "horizon": self.horizon,
            "rank": self.rank,
            "q_membership_residual": to_jsonable(self.q_membership_residual),
            "controller_membership_residual": to_jsonable(
                self.controller_membership_residual
            ),
            "normal_equation_residual": to_jsonable(self.normal_equation_residual),
            "coefficients": to_jsonable(self.coefficients),
            "q_opt": to_jsonable(self.q_opt),
            "controller": to_jsonable(self.controller),
            "qi_report": to_jsonable(self.qi_report),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthesisResult":
        qi = data.get("qi_report")
        return cls(
            q_opt=_controller_from_json(data["q_opt"]),
            objective=float(data["objective"]),
            controller=_controller_from_json(data.get("controller")),
            q_membership_residual=float(data["q_membership_residual"]),
            controller_membership_residual=float(
                data.get("controller_membership_residual") or 0.0
            ),
            normal_equation_residual=float(data["normal_equation_residual"]),
            coefficients=np.asarray(data.get("coefficients", []), dtype=float),
            horizon=int(data["horizon"]),
            rank=int(data.get("rank", 0)),
            qi_report=QiReport.from_dict(qi) if qi else None,
        )


@dataclass
class ProbeReport:
    """Outcome of a sampled set probe.

    ``witness`` holds the evidence behind a negative verdict: for convexity
    the two cloud members, their midpoint and its gap to the cloud; for the
    scaling probes the point, the scale factor and the miss distance.
    """

    kind: str
    verdict: str
    coverage_radius: float
    tolerances: Dict[str, float] = field(default_factory=dict)
    witness: Optional[Dict[str, Any]] = None
    checked: int = 0
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {
                "kind": self.kind,
                "verdict": self.verdict,
                "coverage_radius": self.coverage_radius,
                "tolerances": self.tolerances,
                "witness": self.witness,
                "checked": self.checked,
                "notes": self.notes,
            }
        )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProbeReport":
        return cls(
            kind=data["kind"],
            verdict=data["verdict"],
            coverage_radius=float(data["coverage_radius"] or 0.0),
            tolerances=dict(data.get("tolerances", {})),
            witness=data.get("witness"),
            checked=int(data.get("checked", 0)),
            notes=list(data.get("notes", [])),
        )


@dataclass
class EqualityReport:
    equal: bool
    distance: float
    mode: str
    tol: float
    max_entrywise: Optional[float] = None
    count: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return to_jsonable(
            {
                "equal": self.equal,
                "distance": self.distance,
                "mode": self.mode,
                "tol": self.tol,
                "max_entrywise": self.max_entrywise,
                "count": self.count,
            }
        )


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


@dataclass
class ExampleReport:
    example: str
    checks: List[CheckResult] = field(default_factory=list)
    seed: Optional[int] = None
    artifacts: Dict[str, Any] = field(default_factory=dict)
    # point clouds for CSV export; not part of the JSON report
    clouds: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(CheckResult(name, bool(passed), detail))
        logger.debug("check %s: %s (%s)", name, "pass" if passed else "FAIL", detail)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "example": self.example,
            "passed": self.passed,
            "seed": self.seed,
            "checks": [c.to_dict() for c in self.checks],
            "artifacts": to_jsonable(self.artifacts),
        }
