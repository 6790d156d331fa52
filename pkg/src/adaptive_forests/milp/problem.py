"""Mixed-integer linear problems, their solutions, and an LP text dump."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RELATIONS = ("<=", ">=", "==")
STATUSES = ("optimal", "feasible", "infeasible", "timeout", "unbounded")


@dataclass(frozen=True)
class Variable:
    kind: str  # "continuous" or "binary"
    lower: float
    upper: float
    name: str


@dataclass(frozen=True)
class Constraint:
    """``lower <= sum(coef * x[index]) <= upper``; one side may be infinite."""

    index: np.ndarray
    coef: np.ndarray
    lower: float
    upper: float


class MilpProblem:
    """Linear objective and constraints over continuous and binary variables.

    Parameters
    ----------
    sense : {"min", "max"}
    offset : float
        Constant added to the objective value.
    """

    def __init__(self, sense: str = "min", offset: float = 0.0):
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self.sense = sense
        self.offset = float(offset)
        self.variables: list[Variable] = []
        self.objective: list[float] = []
        self.constraints: list[Constraint] = []

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_binary(self) -> int:
        return sum(v.kind == "binary" for v in self.variables)

    def add_variable(self, kind: str = "continuous", lower: float = 0.0,
                     upper: float = np.inf, obj: float = 0.0, name: str | None = None) -> int:
        if kind not in ("continuous", "binary"):
            raise ValueError(f"unknown variable kind {kind!r}")
        if kind == "binary":
            lower, upper = 0.0, 1.0
        if not (np.isfinite(obj) and lower <= upper and lower < np.inf and upper > -np.inf):
            raise ValueError("invalid bounds or objective coefficient")
        idx = len(self.variables)
        self.variables.append(Variable(kind, float(lower), float(upper), name or f"x{idx}"))
        self.objective.append(float(obj))
        return idx

    def add_variables(self, count: int, kind: str = "continuous", lower: float = 0.0,
                      upper: float = np.inf, obj=0.0, prefix: str = "x") -> np.ndarray:
        obj = np.broadcast_to(np.asarray(obj, dtype=float), (count,))
        start = self.n_vars
        return np.array([self.add_variable(kind, lower, upper, obj[i], f"{prefix}{start + i}")
                         for i in range(count)], dtype=np.int64)

    def set_bounds(self, index: int, lower: float, upper: float) -> None:
        """Tighten or relax the bounds of a continuous variable."""
        v = self.variables[index]
        if v.kind == "binary":
            raise ValueError("binary bounds are fixed at [0, 1]")
        if not (lower <= upper and lower < np.inf and upper > -np.inf):
            raise ValueError("invalid bounds")
        self.variables[index] = Variable(v.kind, float(lower), float(upper), v.name)

    def add_constraint(self, index, coef, relation: str, rhs: float) -> None:
        """Add ``sum_k coef[k] * x[index[k]] (relation) rhs``."""
        if relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}")
        if not np.isfinite(rhs):
            raise ValueError("right-hand side must be finite")
        lower = -np.inf if relation == "<=" else rhs
        upper = np.inf if relation == ">=" else rhs
        self.add_range(index, coef, lower, upper)

    def add_range(self, index, coef, lower: float, upper: float) -> None:
        """Add ``lower <= sum_k coef[k] * x[index[k]] <= upper``."""
        index = np.asarray(index, dtype=np.int64).ravel()
        coef = np.broadcast_to(np.asarray(coef, dtype=float), index.shape).copy()
        if not np.isfinite(coef).all():
            raise ValueError("constraint coefficients must be finite")
        if not (lower <= upper and lower < np.inf and upper > -np.inf):
            raise ValueError("constraint range is empty or unbounded on both sides")
        if index.size and (index.min() < 0 or index.max() >= self.n_vars):
            raise ValueError("constraint refers to an unknown variable")
        self.constraints.append(Constraint(index, coef, float(lower), float(upper)))

    def dense(self):
        """(c, A, row lower, row upper, var lower, var upper, binary mask)."""
        n = self.n_vars
        A = np.zeros((len(self.constraints), n))
        for r, con in enumerate(self.constraints):
            np.add.at(A[r], con.index, con.coef)
        row_lo = np.array([con.lower for con in self.constraints], dtype=float)
        row_hi = np.array([con.upper for con in self.constraints], dtype=float)
        lower = np.array([v.lower for v in self.variables], dtype=float)
        upper = np.array([v.upper for v in self.variables], dtype=float)
        binary = np.array([v.kind == "binary" for v in self.variables], dtype=bool)
        return np.asarray(self.objective, dtype=float), A, row_lo, row_hi, lower, upper, binary

    def evaluate(self, x) -> float:
        return float(np.dot(self.objective, x) + self.offset)

    def violation(self, x) -> float:
        """Largest bound, constraint or integrality violation of ``x``."""
        _, A, row_lo, row_hi, lower, upper, binary = self.dense()
        x = np.asarray(x, dtype=float)
        worst = max(0.0, float(np.max(lower - x, initial=0.0)), float(np.max(x - upper, initial=0.0)))
        if binary.any():
            xb = x[binary]
            worst = max(worst, float(np.abs(xb - np.round(xb)).max()))
        lhs = A @ x
        worst = max(worst, float(np.max(row_lo - lhs, initial=0.0)), float(np.max(lhs - row_hi, initial=0.0)))
        return worst

    def to_lp_text(self) -> str:
        """The problem in CPLEX LP format, for cross-checking elsewhere."""
        def terms(index, coef):
            parts = []
            for i, a in zip(index, coef):
                if a == 0:
                    continue
                sign = "-" if a < 0 else "+"
                parts.append(f"{sign} {abs(a):.17g} {self.variables[i].name}")
            text = " ".join(parts) or "0 " + (self.variables[0].name if self.variables else "")
            return text[2:] if text.startswith("+ ") else text

        lines = ["Maximize" if self.sense == "max" else "Minimize"]
        lines.append(" obj: " + terms(range(self.n_vars), self.objective))
        if self.offset:
            lines.append(f"\\ constant offset {self.offset:.17g}")
        lines.append("Subject To")
        for r, con in enumerate(self.constraints):
            expr = terms(con.index, con.coef)
            if con.lower == con.upper:
                lines.append(f" c{r}: {expr} = {con.upper:.17g}")
                continue
            sides = [(s, op, v) for s, op, v in (("lo", ">=", con.lower), ("hi", "<=", con.upper)) if np.isfinite(v)]
            for suffix, op, v in sides:
                name = f"c{r}" if len(sides) == 1 else f"c{r}_{suffix}"
                lines.append(f" {name}: {expr} {op} {v:.17g}")
        lines.append("Bounds")
        for v in self.variables:
            if v.kind == "binary":
                continue
            lo = "-inf" if v.lower == -np.inf else f"{v.lower:.17g}"
            hi = "+inf" if v.upper == np.inf else f"{v.upper:.17g}"
            lines.append(f" {lo} <= {v.name} <= {hi}")
        binaries = [v.name for v in self.variables if v.kind == "binary"]
        if binaries:
            lines.append("Binaries")
            lines.append(" " + " ".join(binaries))
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass
class MilpSolution:
    status: str
    values: np.ndarray | None
    objective_value: float
    gap: float
    nodes: int = 0
    trace: list = field(default_factory=list, repr=False)

    @property
    def has_solution(self) -> bool:
        return self.values is not None and self.status in ("optimal", "feasible")
