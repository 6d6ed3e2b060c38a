"""Affinity estimation for a single text given fixed reference distributions.

The affinity vector lives on the simplex. It is parametrized by a contrast
vector ``beta`` with ``theta = theta0 + C @ beta`` where ``theta0`` is the
simplex center and ``C`` a Helmert contrast matrix. The objective is the
multinomial mixture log-likelihood ``sum_v x_v log(mu_v)``, ``mu = P.T @ theta``,
optionally plus the log penalty ``lam * sum_k log(theta_k)``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .corpus import CountVector
from .reference import ReferenceModel

__all__ = [
    "ContrastBasis",
    "AffinityFit",
    "contrast_basis",
    "theta_from_beta",
    "beta_from_theta",
    "log_likelihood",
    "score",
    "observed_information",
    "expected_information",
    "estimate_affinity",
    "wald_se",
    "InfeasibleError",
]

DEFAULT_LAMBDA = 0.5
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100

_ARMIJO = 1e-4
_JITTER = 1e-12


class InfeasibleError(ValueError):
    """Raised when beta leaves the region where the objective is finite."""


@dataclass(frozen=True, eq=False)
class ContrastBasis:
    k: int
    theta0: np.ndarray
    contrast: np.ndarray  # K x (K-1)


@dataclass(eq=False)
class AffinityFit:
    theta: np.ndarray
    beta: np.ndarray
    loglik: float
    penalized_loglik: float
    iterations: int
    converged: bool
    grad_norm: float
    wald_se_theta: np.ndarray
    lam: float = 0.0
    doc_id: str = ""
    # classes pinned at theta_k = 0 (only possible when lam == 0)
    active: tuple[int, ...] = field(default=())
    # penalized objective after each accepted step, starting point first
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def interior(self) -> bool:
        return not self.active and bool(np.all(self.theta > 0))


@functools.lru_cache(maxsize=None)
def _helmert(k: int) -> tuple[np.ndarray, np.ndarray]:
    C = np.zeros((k, k - 1))
    for j in range(1, k):
        C[:j, j - 1] = -1.0 / j
        C[j, j - 1] = 1.0
    theta0 = np.full(k, 1.0 / k)
    C.setflags(write=False)
    theta0.setflags(write=False)
    return theta0, C


def contrast_basis(k: int) -> ContrastBasis:
    """Center of the K-simplex and the Helmert contrast matrix.

    Column ``j`` (1-based) holds ``j`` leading entries ``-1/j`` followed by
    a one; for ``k = 2`` this gives ``theta = (1/2 - beta, 1/2 + beta)``.
    """
    if k < 2:
        raise ValueError("need k >= 2")
    theta0, C = _helmert(int(k))
    return ContrastBasis(int(k), theta0, C)


def theta_from_beta(basis: ContrastBasis, beta) -> np.ndarray:
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if beta.shape != (basis.k - 1,):
        raise ValueError(f"beta must have length {basis.k - 1}")
    return basis.theta0 + basis.contrast @ beta


def beta_from_theta(basis: ContrastBasis, theta) -> np.ndarray:
    # Helmert columns are mutually orthogonal
    C = basis.contrast
    diff = np.asarray(theta, dtype=float) - basis.theta0
    return (C.T @ diff) / np.einsum("ij,ij->j", C, C)


def _probs(model) -> np.ndarray:
    if isinstance(model, ReferenceModel):
        return model.probs
    P = np.asarray(model, dtype=float)
    if P.ndim != 2 or P.shape[0] < 2:
        raise ValueError("reference probabilities must be a K x V array with K >= 2")
    return P


def _counts(x, V: int) -> np.ndarray:
    if isinstance(x, CountVector):
        return x.to_array(V)
    x = np.asarray(x, dtype=float)
    if x.shape != (V,):
        raise ValueError(f"count vector must have length {V}")
    return x


class _Objective:
    """Penalized log-likelihood restricted to the observed word types."""

    def __init__(self, P: np.ndarray, x: np.ndarray, lam: float):
        if lam < 0:
            raise ValueError("lambda must be nonnegative")
        nz = np.flatnonzero(x)
        self.P = P[:, nz]
        self.x = x[nz]
        self.n = float(x.sum())
        self.lam = float(lam)
        self.basis = contrast_basis(P.shape[0])

    def _parts(self, beta):
        theta = theta_from_beta(self.basis, beta)
        mu = theta @ self.P
        if self.lam > 0 and np.any(theta <= 0):
            return theta, mu, False
        if np.any(mu <= 0) or np.any(theta < -1e-15):
            return theta, mu, False
        return theta, mu, True

    def value(self, beta) -> tuple[float, float]:
        """(penalized objective, plain log-likelihood); -inf when infeasible."""
        theta, mu, ok = self._parts(beta)
        if not ok:
            return -math.inf, -math.inf
        ll = float(self.x @ np.log(mu))
        pen = self.lam * float(np.sum(np.log(theta))) if self.lam > 0 else 0.0
        return ll + pen, ll

    def derivatives(self, beta):
        theta, mu, ok = self._parts(beta)
        if not ok:
            raise InfeasibleError(f"beta={np.asarray(beta)} is outside the feasible region")
        C = self.basis.contrast
        Q = self.P / mu  # K x V_observed
        QC = C.T @ Q  # (K-1) x V_observed
        grad_theta = Q @ self.x
        H = (QC * self.x) @ QC.T
        if self.lam > 0:
            grad_theta = grad_theta + self.lam / theta
            H = H + self.lam * (C.T * (1.0 / theta**2)) @ C
        return grad_theta, C.T @ grad_theta, H


def _solve_spd(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(H), g)
    except np.linalg.LinAlgError:
        pass
    try:
        Hj = H + _JITTER * np.eye(H.shape[0])
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(Hj), g)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(H, g, rcond=None)[0]


def log_likelihood(model, x, beta, lam: float = 0.0) -> float:
    """Penalized log-likelihood ``sum_v x_v log mu_v + lam * sum_k log theta_k``."""
    P = _probs(model)
    val, _ = _Objective(P, _counts(x, P.shape[1]), lam).value(beta)
    if val == -math.inf:
        raise InfeasibleError("objective is not finite at this beta")
    return val


def score(model, x, beta, lam: float = 0.0) -> np.ndarray:
    P = _probs(model)
    return _Objective(P, _counts(x, P.shape[1]), lam).derivatives(beta)[1]


def observed_information(model, x, beta, lam: float = 0.0) -> np.ndarray:
    """Negative Hessian of the penalized objective in beta."""
    P = _probs(model)
    return _Objective(P, _counts(x, P.shape[1]), lam).derivatives(beta)[2]


def expected_information(model, n: float, beta) -> np.ndarray:
    """``n * C.T @ Q @ P.T @ C`` with ``Q = P / mu``; unpenalized."""
    P = _probs(model)
    basis = contrast_basis(P.shape[0])
    theta = theta_from_beta(basis, beta)
    if np.any(theta < 0):
        raise InfeasibleError("theta has a negative component")
    mu = theta @ P
    keep = mu > 0
    Q = P[:, keep] / mu[keep]
    C = basis.contrast
    return n * (C.T @ Q @ P[:, keep].T @ C)


def _null_basis(C: np.ndarray, active: list[int]) -> np.ndarray:
    if not active:
        return np.eye(C.shape[1])
    return scipy.linalg.null_space(C[sorted(active)])


def estimate_affinity(
    model,
    x,
    lam: float = DEFAULT_LAMBDA,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    doc_id: str | None = None,
) -> AffinityFit:
    """Maximize the penalized likelihood by damped Newton from the simplex center.

    With ``lam > 0`` the log penalty acts as the barrier and the maximizer is
    interior. With ``lam == 0`` steps are cut at the simplex boundary; a class
    whose affinity reaches zero is held there while the remaining coordinates
    are optimized, and is released again if its partial derivative points back
    into the simplex.
    """
    P = _probs(model)
    xa = _counts(x, P.shape[1])
    if doc_id is None:
        doc_id = x.doc_id if isinstance(x, CountVector) else ""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0 and xa.sum() <= 0:
        raise ValueError("empty count vector: the unpenalized likelihood is flat")
    obj = _Objective(P, xa, lam)
    basis = obj.basis
    C = basis.contrast
    K = basis.k

    beta = np.zeros(K - 1)
    f, _ = obj.value(beta)
    if f == -math.inf:
        raise InfeasibleError("objective is not finite at the simplex center")
    active: list[int] = []
    history = [f]
    just_released = None
    converged = False
    it = 0
    grad_norm = math.inf
    while it < max_iter:
        it += 1
        grad_theta, g, H = obj.derivatives(beta)
        Z = _null_basis(C, active)
        if Z.shape[1]:
            gz = Z.T @ g
            dz = _solve_spd(Z.T @ H @ Z, gz)
            decrement = 0.5 * float(gz @ dz)
            grad_norm = float(np.max(np.abs(gz)))
        else:
            gz = dz = np.zeros(0)
            decrement = grad_norm = 0.0
        d = Z @ dz

        if decrement < tol or grad_norm < tol:
            if Z.shape[1] and grad_norm > 0:
                # final full step to squeeze out the last quadratic-convergence digits
                trial = beta + d
                ft, _ = obj.value(trial)
                # objective differences here are at rounding level; only reject genuine losses
                if ft >= f - 1e-12 * (1.0 + abs(f)):
                    beta, f = trial, max(ft, f)
                    history.append(f)
            released = _release(grad_theta, active)
            if released is None:
                converged = True
                break
            active.remove(released)
            just_released = released
            continue

        theta = theta_from_beta(basis, beta)
        t_max, blocking = _step_to_boundary(theta, C @ d, active)
        if just_released is not None and blocking == just_released and t_max < 1e-12:
            # Newton direction would pin the released class again; move toward its vertex instead
            toward = -theta
            toward[just_released] += 1.0
            d = beta_from_theta(basis, basis.theta0 + toward)
            t_max, blocking = _step_to_boundary(theta, C @ d, active)
        just_released = None
        # with a penalty the boundary is a barrier: stay a fixed fraction away from it
        t = min(1.0, t_max) if lam == 0 else min(1.0, 0.99 * t_max)
        slope = float(g @ d)
        while True:
            trial = beta + t * d
            if lam == 0 and t == t_max:
                # land exactly on the face
                th = theta_from_beta(basis, trial)
                th[blocking] = 0.0
                trial = beta_from_theta(basis, th)
            ft, _ = obj.value(trial)
            if ft >= f + _ARMIJO * t * slope:
                break
            t *= 0.5
            if t < 1e-20:
                break
        if t < 1e-20:
            break
        if lam == 0 and t == t_max and blocking is not None:
            active.append(blocking)
        beta, f = trial, ft
        history.append(f)

    theta = theta_from_beta(basis, beta)
    theta[active] = 0.0
    _, ll = obj.value(beta)
    fit = AffinityFit(
        theta=theta,
        beta=beta,
        loglik=ll,
        penalized_loglik=f,
        iterations=it,
        converged=converged,
        grad_norm=grad_norm,
        wald_se_theta=np.full(K, np.nan),
        lam=float(lam),
        doc_id=doc_id,
        active=tuple(sorted(active)),
        history=history,
    )
    if converged and not active:
        fit.wald_se_theta = wald_se(P, xa, beta, lam)
    return fit


def _step_to_boundary(theta: np.ndarray, dtheta: np.ndarray, active=()) -> tuple[float, int | None]:
    shrinking = dtheta < 0
    # pinned classes move only by rounding error along face directions
    shrinking[list(active)] = False
    if not np.any(shrinking):
        return math.inf, None
    ratios = np.full(theta.shape, math.inf)
    ratios[shrinking] = np.maximum(theta[shrinking], 0.0) / -dtheta[shrinking]
    blocking = int(np.argmin(ratios))
    return float(ratios[blocking]), blocking


def _release(grad_theta: np.ndarray, active: list[int]) -> int | None:
    """Active class whose partial derivative exceeds the free classes' common level."""
    if not active:
        return None
    free = [k for k in range(len(grad_theta)) if k not in active]
    level = float(np.mean(grad_theta[free]))
    excess = {k: grad_theta[k] - level for k in active}
    k, gap = max(excess.items(), key=lambda kv: kv[1])
    if gap > 1e-8 * max(1.0, abs(level)):
        return k
    return None


def beta_covariance(model, x, beta, lam: float = 0.0) -> np.ndarray:
    """Inverse penalized observed information; NaN-filled when singular."""
    H = observed_information(model, x, beta, lam)
    try:
        cf = scipy.linalg.cho_factor(H)
    except np.linalg.LinAlgError:
        return np.full(H.shape, np.nan)
    return scipy.linalg.cho_solve(cf, np.eye(H.shape[0]))


def wald_se(model, x, beta, lam: float = 0.0) -> np.ndarray:
    """Standard errors of theta-hat from the inverse penalized observed information."""
    P = _probs(model)
    cov = beta_covariance(P, x, beta, lam)
    C = contrast_basis(P.shape[0]).contrast
    var = np.einsum("ij,jk,ik->i", C, cov, C)
    return np.sqrt(np.clip(var, 0.0, None))
