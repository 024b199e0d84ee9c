"""Finite eigenvalues of the saddle-point pencil K x = lambda Mt x."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .assembly import GlobalSystem
from .errors import DimensionTooLarge, FactorizationSingular, NonConvergence

__all__ = ["Mode", "Solver", "EigenRequest", "EigenSolution", "solve_gevp", "cross_validate", "match_eigenvalues"]

INFINITE_THETA = 1e-10
INFINITE_BETA = 1e-10


class Mode(str, enum.Enum):
    Primal = "primal"
    Dual = "dual"


class Solver(str, enum.Enum):
    ShiftInvert = "shift-invert"
    DenseQZ = "dense-qz"


@dataclass(frozen=True)
class EigenRequest:
    k: int = 4
    shift: complex = 1.0
    mode: Mode = Mode.Primal
    solver: Solver = Solver.ShiftInvert
    tol: float = 1e-10
    max_restarts: int = 300
    extra: int = 4

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "solver", Solver(self.solver))


@dataclass
class EigenSolution:
    """Eigenpairs sorted by |lambda| (ties: ascending imaginary part).

    ``velocity`` holds free-DOF coefficients (n_u, k), normalised to unit
    discrete mass; ``pressure`` is (n_p, k).
    """

    values: np.ndarray
    velocity: np.ndarray
    pressure: np.ndarray
    residual: np.ndarray
    divergence: np.ndarray
    stab_fraction: np.ndarray
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    @property
    def is_complex(self):
        v = self.values
        return np.abs(v.imag) > 1e-6 * np.abs(v)


def _order(values):
    return np.lexsort((values.imag, np.round(np.abs(values), 10)))


def _normalise(system, X):
    nu = system.n_u
    u = X[:nu]
    mass = np.real(np.einsum("ij,ij->j", u.conj(), system.M @ u))
    scale = 1.0 / np.sqrt(np.maximum(mass, 1e-300))
    X = X * scale
    # fix the phase: largest velocity entry real positive
    idx = np.argmax(np.abs(X[:nu]), axis=0)
    ph = X[idx, np.arange(X.shape[1])]
    ph = ph / np.abs(ph)
    return X / ph


def _diagnostics(system, K, Mt, values, X):
    nu = system.n_u
    R = K @ X - (Mt @ X) * values
    nx = np.linalg.norm(X, axis=0)
    residual = np.linalg.norm(R, axis=0) / nx
    u = X[:nu]
    un = np.linalg.norm(u, axis=0)
    divergence = np.linalg.norm(system.B @ u, axis=0) / np.maximum(un, 1e-300)
    s = np.real(np.einsum("ij,ij->j", u.conj(), system.stabilization @ u))
    a = np.real(np.einsum("ij,ij->j", u.conj(), system.stiffness @ u))
    return residual, divergence, s / np.maximum(a, 1e-300)


def _factor(K, Mt, shift):
    last = None
    sigma = shift
    for attempt in range(4):
        try:
            OP = (K - sigma * Mt).tocsc()
            if np.iscomplexobj(sigma) and sigma.imag == 0:
                OP = OP.real
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                return spla.splu(OP, permc_spec="COLAMD"), sigma
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            last = exc
            sigma = sigma * (1.0 + 1e-3 * (attempt + 1)) + 1e-3 * (attempt + 1)
    raise FactorizationSingular(f"shifted pencil singular near sigma={shift}: {last}")


def _shift_invert(system, K, Mt, request):
    n = K.shape[0]
    shift = complex(request.shift)
    if shift.imag == 0:
        shift = shift.real
    lu, sigma = _factor(K, Mt, shift)
    want = request.k + request.extra
    dtype = complex if np.iscomplexobj(sigma) or np.iscomplexobj(K.data) else float
    opcount = [0]

    def matvec(x):
        opcount[0] += 1
        return lu.solve(np.asarray(Mt @ x, dtype=dtype))

    if want >= n - 1:
        # too small for ARPACK: dense eigendecomposition of the same inverted operator
        T = lu.solve(np.asarray(Mt.toarray(), dtype=dtype))
        theta, X = sla.eig(T)
        keep = np.abs(theta) > INFINITE_THETA
        return sigma + 1.0 / theta[keep], X[:, keep], {"matvecs": n, "ncv": n, "sigma": sigma}
    op = spla.LinearOperator((n, n), matvec=matvec, dtype=dtype)
    nev = want
    ncv = min(n - 1, max(2 * nev + 10, 30))
    rng = np.random.default_rng(0)
    v0 = lu.solve(np.asarray(Mt @ rng.standard_normal(n), dtype=dtype))
    try:
        theta, X = spla.eigs(op, k=nev, which="LM", ncv=ncv, tol=request.tol, maxiter=request.max_restarts * ncv, v0=v0)
    except spla.ArpackNoConvergence as exc:
        raise NonConvergence(
            "Arnoldi did not converge", {"converged": len(exc.eigenvalues), "matvecs": opcount[0], "ncv": ncv}
        ) from exc
    keep = np.abs(theta) > INFINITE_THETA
    theta, X = theta[keep], X[:, keep]
    values = sigma + 1.0 / theta
    stats = {"matvecs": opcount[0], "ncv": ncv, "sigma": sigma}
    return values, X, stats


def _dense_qz(system, K, Mt, request):
    n = K.shape[0]
    if n > 3000:
        raise DimensionTooLarge(f"dense QZ limited to dimension 3000, got {n}")
    w, V = sla.eig(K.toarray(), Mt.toarray(), homogeneous_eigvals=True)
    alpha, beta = w
    scale = np.hypot(np.abs(alpha), np.abs(beta))
    finite = np.abs(beta) > INFINITE_BETA * scale
    values = alpha[finite] / beta[finite]
    return values, V[:, finite], {"dimension": n}


def solve_gevp(system: GlobalSystem, request: EigenRequest = None) -> EigenSolution:
    request = request or EigenRequest()
    K, Mt = system.pencil()
    if request.mode == Mode.Dual:
        K = K.T.conj().tocsc()
        Mt = Mt.T.conj().tocsc()
    if request.solver == Solver.DenseQZ:
        values, X, stats = _dense_qz(system, K, Mt, request)
    else:
        values, X, stats = _shift_invert(system, K, Mt, request)
    order = _order(values)[: request.k]
    values, X = values[order], X[:, order]
    X = _normalise(system, X)
    residual, divergence, rho = _diagnostics(system, K, Mt, values, X)
    nu = system.n_u
    return EigenSolution(
        values=values,
        velocity=X[:nu],
        pressure=X[nu : nu + system.n_p],
        residual=residual,
        divergence=divergence,
        stab_fraction=rho,
        stats=stats,
    )


def match_eigenvalues(a, b):
    """Greedy nearest matching; returns index pairs and distances."""
    a, b = np.asarray(a), np.asarray(b)
    d = np.abs(a[:, None] - b[None, :])
    pairs = []
    used_a, used_b = set(), set()
    for flat in np.argsort(d, axis=None):
        i, j = np.unravel_index(flat, d.shape)
        if i in used_a or j in used_b:
            continue
        pairs.append((i, j, d[i, j]))
        used_a.add(i)
        used_b.add(j)
        if len(used_a) == len(a) or len(used_b) == len(b):
            break
    return pairs


def cross_validate(system: GlobalSystem, k=4, shift=1.0):
    """Max |lambda_shift-invert - lambda_QZ| over the k smallest eigenvalues."""
    if system.dim > 3000:
        raise DimensionTooLarge(f"pencil dimension {system.dim} exceeds 3000")
    si = solve_gevp(system, EigenRequest(k=k, shift=shift, solver=Solver.ShiftInvert))
    qz = solve_gevp(system, EigenRequest(k=k + 2, shift=shift, solver=Solver.DenseQZ))
    return max(dist for _, _, dist in match_eigenvalues(si.values, qz.values))
