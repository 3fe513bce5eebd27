"""Matrix types, validity checks and small linear-algebra helpers."""

from dataclasses import dataclass, fields
from typing import Literal

import numpy as np

SYM_TOL = 1e-10
EIG_TOL = 1e-9
FEAS_TOL = 1e-8


class ContractError(ValueError):
    """An input violates a documented precondition."""


def _square(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError(f"{name} must be square, got shape {M.shape}")
    return M


@dataclass(frozen=True)
class Violation:
    invariant: str
    magnitude: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def names(self):
        return [v.invariant for v in self.violations]


def validate_gso(M, mode: Literal["groundTruth", "estimate"] = "groundTruth", tol=FEAS_TOL):
    """Check the graph-shift-operator invariants of ``M``.

    Ground-truth graphs only need to be symmetric, hollow and nonnegative.
    Estimates must additionally have every row sum at least one.

    Returns
    -------
    ValidationReport
        Empty (and truthy) when ``M`` satisfies every invariant within ``tol``.
    """
    M = _square(M, "GSO")
    if mode not in ("groundTruth", "estimate"):
        raise ValueError(f"unknown mode {mode!r}")
    out = []
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > tol:
        out.append(Violation("symmetric", asym))
    diag = float(np.max(np.abs(np.diag(M)))) if M.size else 0.0
    if diag > tol:
        out.append(Violation("hollow", diag))
    neg = float(-np.min(M)) if M.size else 0.0
    if neg > tol:
        out.append(Violation("nonnegative", neg))
    if mode == "estimate":
        short = float(np.max(1.0 - M.sum(axis=1))) if M.size else 0.0
        if short > tol:
            out.append(Violation("row_sum", short))
    return ValidationReport(tuple(out))


@dataclass(frozen=True, eq=False)
class Gso:
    """Symmetric, hollow, nonnegative adjacency matrix."""

    values: np.ndarray
    mode: str = "groundTruth"

    def __post_init__(self):
        object.__setattr__(self, "values", _square(self.values, "GSO").copy())
        self.values.setflags(write=False)

    @property
    def n(self):
        return self.values.shape[0]

    def validate(self, tol=FEAS_TOL):
        return validate_gso(self.values, self.mode, tol)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True, eq=False)
class SampleCovariance:
    values: np.ndarray
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, "values", _square(self.values, "covariance").copy())
        self.values.setflags(write=False)
        if int(self.sample_count) < 1:
            raise ContractError("sample_count must be positive")

    @property
    def n(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True, eq=False)
class EigenPair:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def sym_eig(M, sym_tol=SYM_TOL):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending."""
    M = _square(M)
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if M.size and np.max(np.abs(M - M.T)) > sym_tol * scale:
        raise ContractError("sym_eig requires a symmetric matrix")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    return EigenPair(w, V)


def commutator(A, B):
    return A @ B - B @ A


def commutator_residual(T, S):
    """Frobenius norm of ``T S - S T``."""
    T = _square(T, "Theta")
    S = _square(S, "S")
    if T.shape != S.shape:
        raise ContractError(f"dimension mismatch {T.shape} vs {S.shape}")
    return float(np.linalg.norm(T @ S - S @ T))


def spectral_norm(M):
    """Largest absolute eigenvalue of a symmetric matrix."""
    M = _square(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(sym_eig(M, sym_tol=1e-8).eigenvalues)))


@dataclass(frozen=True)
class PglConfig:
    """Hyperparameters of the alternating solver.

    ``eta=None`` resolves to ``1e-3 * rho``. ``delta=None`` resolves per
    problem through :func:`pgl_lab.solver.default_delta`. ``glasso_rho`` is
    relative: the graphical-lasso penalty is ``glasso_rho`` times the median
    absolute off-diagonal entry of the sample covariance.
    """

    rho: float = 1e-3
    eta: float | None = None
    delta: float | None = None
    delta0: float = 0.1
    beta0: float = 1.0
    mu: float = 10.0
    tau_inc: float = 2.0
    tau_dec: float = 2.0
    adapt_beta: bool = True
    beta_freeze_after: int = 100
    outer_iters: int = 30
    inner_iters: int = 200
    inner_tol: float = 1e-6
    theta_tol_factor: float = 10.0
    lipschitz_mode: Literal["analytic", "backtracking"] = "backtracking"
    backtrack_factor: float = 0.5
    backtrack_max: int = 30
    l2_floor: float = 1e-6
    dykstra_max_iters: int = 1000
    dykstra_tol: float = 1e-9
    feas_tol: float = FEAS_TOL
    obj_tol: float = 1e-4
    early_stop: bool = True
    gsr_eps_c: float = 1.0
    gsr_iters: int = 2000
    init: Literal["gsr", "glasso"] = "gsr"
    glasso_rho: float = 1.0
    cov_reg: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.rho <= 0:
            raise ContractError("rho must be positive")
        if self.eta is not None and self.eta < 0:
            raise ContractError("eta must be nonnegative")
        if self.delta is not None and self.delta <= 0:
            raise ContractError("delta must be positive")
        if self.beta0 <= 0:
            raise ContractError("beta0 must be positive")
        for name in ("mu", "tau_inc", "tau_dec"):
            if getattr(self, name) <= 1:
                raise ContractError(f"{name} must exceed 1")
        if self.outer_iters < 1 or self.inner_iters < 1:
            raise ContractError("iteration counts must be positive")
        if self.lipschitz_mode not in ("analytic", "backtracking"):
            raise ContractError(f"unknown lipschitz_mode {self.lipschitz_mode!r}")
        if self.init not in ("gsr", "glasso"):
            raise ContractError(f"unknown init {self.init!r}")

    @property
    def eta_value(self):
        return 1e-3 * self.rho if self.eta is None else self.eta

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}
