"""Generic linear / mixed-binary program container and solution records."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

LE, GE, EQ = "<=", ">=", "="
SENSES = (LE, GE, EQ)


@dataclass(frozen=True)
class Tolerances:
    """All solver tolerances in one place."""

    feasibility: float = 1e-7
    optimality: float = 1e-7
    integrality: float = 1e-6
    duality: float = 1e-6
    pivot: float = 1e-9
    degenerate_streak: int = 50
    refactor_every: int = 60


TOL = Tolerances()


class LinearProgram:
    """Minimisation LP with optional binary columns.

    Rows are stored in coordinate form while the model is being built;
    `matrix()` returns a CSR view that is cached until the next mutation.
    """

    def __init__(self, name: str = "lp"):
        self.name = name
        self.col_names: list[str] = []
        self.lo: list[float] = []
        self.hi: list[float] = []
        self.cost: list[float] = []
        self.binary: list[bool] = []
        self.row_names: list[str] = []
        self.sense: list[str] = []
        self.rhs: list[float] = []
        self._ri: list[int] = []
        self._ci: list[int] = []
        self._v: list[float] = []
        self._col_index: dict[str, int] = {}
        self._row_index: dict[str, int] = {}
        self.obj_offset = 0.0
        self._csr = None

    # -- building ----------------------------------------------------------
    @property
    def n_cols(self) -> int:
        return len(self.col_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def add_col(self, name: str, lo: float = 0.0, hi: float = np.inf, cost: float = 0.0,
                binary: bool = False) -> int:
        if name in self._col_index:
            raise ValueError(f"duplicate column {name!r}")
        if binary:
            lo, hi = max(0.0, lo), min(1.0, hi)
        if lo > hi:
            raise ValueError(f"column {name!r} has lo > hi")
        j = len(self.col_names)
        self.col_names.append(name)
        self.lo.append(float(lo))
        self.hi.append(float(hi))
        self.cost.append(float(cost))
        self.binary.append(bool(binary))
        self._col_index[name] = j
        return j

    def add_row(self, coefs, sense: str, rhs: float, name: str | None = None) -> int:
        """Add a row. `coefs` is a mapping or iterable of (col, value)."""
        if sense not in SENSES:
            raise ValueError(f"bad sense {sense!r}")
        if not np.isfinite(rhs):
            raise ValueError("row rhs must be finite")
        i = len(self.row_names)
        name = name or f"r{i}"
        if name in self._row_index:
            raise ValueError(f"duplicate row {name!r}")
        items = coefs.items() if hasattr(coefs, "items") else coefs
        for j, v in items:
            if v != 0.0:
                self._ri.append(i)
                self._ci.append(int(j))
                self._v.append(float(v))
        self.row_names.append(name)
        self.sense.append(sense)
        self.rhs.append(float(rhs))
        self._row_index[name] = i
        self._csr = None
        return i

    def col(self, name: str) -> int:
        return self._col_index[name]

    def row(self, name: str) -> int:
        return self._row_index[name]

    def has_col(self, name: str) -> bool:
        return name in self._col_index

    def set_bounds(self, j: int, lo: float | None = None, hi: float | None = None) -> None:
        if lo is not None:
            self.lo[j] = float(lo)
        if hi is not None:
            self.hi[j] = float(hi)

    # -- views -------------------------------------------------------------
    def matrix(self) -> sp.csr_matrix:
        if self._csr is None:
            self._csr = sp.csr_matrix(
                (np.asarray(self._v, float), (np.asarray(self._ri, int), np.asarray(self._ci, int))),
                shape=(self.n_rows, self.n_cols))
            self._csr.sum_duplicates()
        return self._csr

    def arrays(self):
        """(A, sense, rhs, cost, lo, hi, binary) as numpy objects."""
        return (self.matrix(), np.asarray(self.sense, dtype=object), np.asarray(self.rhs, float),
                np.asarray(self.cost, float), np.asarray(self.lo, float),
                np.asarray(self.hi, float), np.asarray(self.binary, bool))

    def copy(self) -> "LinearProgram":
        other = LinearProgram(self.name)
        for attr in ("col_names", "lo", "hi", "cost", "binary", "row_names", "sense", "rhs",
                     "_ri", "_ci", "_v"):
            setattr(other, attr, list(getattr(self, attr)))
        other._col_index = dict(self._col_index)
        other._row_index = dict(self._row_index)
        other.obj_offset = self.obj_offset
        return other

    def with_rhs(self, rhs) -> "LinearProgram":
        """View with a different right-hand side; structure and matrix cache are shared."""
        self.matrix()
        other = copy.copy(self)
        other.rhs = [float(v) for v in rhs]
        return other

    def with_bounds(self, lo, hi) -> "LinearProgram":
        """View with different column bounds; structure and matrix cache are shared."""
        self.matrix()
        other = copy.copy(self)
        other.lo = [float(v) for v in lo]
        other.hi = [float(v) for v in hi]
        return other

    def relaxed(self) -> "LinearProgram":
        """View with every binary column treated as continuous on [0, 1]."""
        self.matrix()
        other = copy.copy(self)
        other.binary = [False] * self.n_cols
        return other

    def objective_value(self, x) -> float:
        return float(np.dot(self.cost, x)) + self.obj_offset

    def row_activity(self, x) -> np.ndarray:
        return self.matrix() @ np.asarray(x, float)

    def max_violation(self, x) -> float:
        """Largest primal infeasibility of `x` (rows and bounds)."""
        x = np.asarray(x, float)
        act = self.row_activity(x)
        rhs = np.asarray(self.rhs)
        sense = np.asarray(self.sense, dtype=object)
        viol = np.zeros(self.n_rows)
        viol = np.where(sense == LE, np.maximum(act - rhs, 0), viol)
        viol = np.where(sense == GE, np.maximum(rhs - act, 0), viol)
        viol = np.where(sense == EQ, np.abs(act - rhs), viol)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        bviol = np.maximum(np.maximum(lo - x, x - hi), 0)
        return float(max(viol.max(initial=0.0), bviol.max(initial=0.0)))

    def validate(self) -> None:
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ValueError("column with lo > hi")
        for j, b in enumerate(self.binary):
            if b and (self.lo[j] < 0 or self.hi[j] > 1):
                raise ValueError(f"binary column {self.col_names[j]} outside [0,1]")
        if not all(np.isfinite(self.rhs)):
            raise ValueError("non-finite rhs")


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | numerics | iteration_limit
    x: np.ndarray | None = None
    objective: float = np.nan
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class MipSolution:
    status: str  # optimal | infeasible | unbounded | node_limit | time_limit | numerics
    x: np.ndarray | None = None
    objective: float = np.inf
    bound: float = -np.inf
    nodes: int = 0
    bound_trace: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None


def dual_objective(lp: LinearProgram, sol: LpSolution, rhs=None, tol: float = 1e-9) -> float:
    """b'y plus the bound terms carried by the reduced costs."""
    if sol.duals is None or sol.reduced_costs is None:
        raise ValueError("solution carries no dual information")
    b = np.asarray(lp.rhs if rhs is None else rhs, float)
    val = float(b @ sol.duals)
    d = sol.reduced_costs
    lo, hi = np.asarray(lp.lo), np.asarray(lp.hi)
    pos, neg = d > tol, d < -tol
    if np.any(pos & ~np.isfinite(lo)) or np.any(neg & ~np.isfinite(hi)):
        return -np.inf
    val += float(d[pos] @ lo[pos]) + float(d[neg] @ hi[neg])
    return val + lp.obj_offset
