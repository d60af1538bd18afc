"""Kernel SVM trained with sequential minimal optimization, one-vs-rest for multi-class."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numba
import numpy as np

log = logging.getLogger(__name__)

KKT_TOL = 1e-3


def kernel_matrix(A, B, kernel: str, rbf_gamma: float = 1.0) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
        return np.exp(-rbf_gamma * np.maximum(d2, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


@numba.njit(cache=True)
def _smo(K, y, C, eps, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    tau = 1e-12
    it = 0
    while it < max_iter:
        # i: maximal violating index in I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * G[t]
                if v > gmax:
                    gmax = v
                    i = t
        # j: second-order choice in I_low
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                yg = y[t] * G[t]
                if yg > gmax2:
                    gmax2 = yg
                if i >= 0:
                    b = gmax + yg
                    if b > 0:
                        a = K[i, i] + K[t, t] - 2.0 * K[i, t]
                        if a <= 0:
                            a = tau
                        obj = -(b * b) / a
                        if obj < obj_min:
                            obj_min = obj
                            j = t
        if i < 0 or j < 0 or gmax + gmax2 < eps:
            break
        it += 1
        ai_old = alpha[i]
        aj_old = alpha[j]
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0:
            quad = tau
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            s = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if s > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = s - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = s
            if s > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = s - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = s
        dai = alpha[i] - ai_old
        daj = alpha[j] - aj_old
        for t in range(n):
            G[t] += y[t] * (y[i] * K[t, i] * dai + y[j] * K[t, j] * daj)

    # bias from free vectors, else midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    nfree = 0
    sfree = 0.0
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    rho = sfree / nfree if nfree > 0 else (ub + lb) / 2.0
    return alpha, rho, it


@dataclass
class BinarySvm:
    alpha: np.ndarray
    y: np.ndarray
    rho: float
    C: float
    iterations: int

    @property
    def coef(self) -> np.ndarray:
        return self.alpha * self.y

    def decision_from_kernel(self, K_test_train: np.ndarray) -> np.ndarray:
        return K_test_train @ self.coef - self.rho


def fit_binary(K: np.ndarray, y, C: float, tol: float = KKT_TOL,
               max_iter: int | None = None) -> BinarySvm:
    y = np.where(np.asarray(y) > 0, 1.0, -1.0)
    n = y.size
    max_iter = max_iter or max(200_000, 200 * n)
    alpha, rho, it = _smo(np.ascontiguousarray(K, dtype=float), y, float(C), float(tol), max_iter)
    if it >= max_iter:
        log.warning("SMO hit the iteration cap (%d) before reaching tolerance %g", max_iter, tol)
    return BinarySvm(alpha, y, float(rho), float(C), int(it))


def kkt_violation(machine: BinarySvm, K: np.ndarray) -> float:
    """Largest KKT violation of a trained machine on its own training kernel."""
    f = K @ machine.coef - machine.rho
    yf = machine.y * f
    a, C = machine.alpha, machine.C
    viol = np.zeros_like(yf)
    at_zero = a <= 0
    at_c = a >= C
    free = ~(at_zero | at_c)
    viol[at_zero] = np.maximum(0.0, 1.0 - yf[at_zero])
    viol[at_c] = np.maximum(0.0, yf[at_c] - 1.0)
    viol[free] = np.abs(yf[free] - 1.0)
    return float(viol.max()) if viol.size else 0.0


@dataclass
class SvmModel:
    """One-vs-rest machines sharing one set of training vectors."""

    kernel: str
    C: float
    rbf_gamma: float
    classes: np.ndarray
    X_train: np.ndarray
    machines: list[BinarySvm]
    manifest: dict = field(default_factory=dict)

    def kernel_with(self, X) -> np.ndarray:
        return kernel_matrix(X, self.X_train, self.kernel, self.rbf_gamma)

    def decision_function(self, X) -> np.ndarray:
        Kt = self.kernel_with(np.atleast_2d(np.asarray(X, dtype=float)))
        return np.column_stack([m.decision_from_kernel(Kt) for m in self.machines])

    def predict(self, X) -> np.ndarray:
        # argmax picks the first maximum, i.e. the lowest class label on ties
        return self.classes[np.argmax(self.decision_function(X), axis=1)]

    def to_json(self) -> dict:
        sv = sorted(set(np.flatnonzero(np.any([m.alpha > 0 for m in self.machines], axis=0)).tolist()))
        return {
            "format": "episignal-svm/1",
            "kernel": self.kernel, "C": self.C, "rbf_gamma": self.rbf_gamma,
            "classes": [int(c) for c in self.classes],
            "support_vectors": [[float(v) for v in self.X_train[i]] for i in sv],
            "machines": [{"coef": [float(m.coef[i]) for i in sv], "rho": m.rho,
                          "iterations": m.iterations} for m in self.machines],
            "manifest": self.manifest,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SvmModel":
        X = np.array(data["support_vectors"], dtype=float)
        machines = []
        for m in data["machines"]:
            coef = np.array(m["coef"], dtype=float)
            y = np.where(coef >= 0, 1.0, -1.0)
            machines.append(BinarySvm(np.abs(coef), y, float(m["rho"]), float(data["C"]),
                                      int(m.get("iterations", 0))))
        return cls(data["kernel"], float(data["C"]), float(data["rbf_gamma"]),
                   np.array(data["classes"]), X, machines, data.get("manifest", {}))


def fit_ovr(X, y, kernel: str = "linear", C: float = 1.0, rbf_gamma: float = 0.1,
            tol: float = KKT_TOL, K: np.ndarray | None = None) -> SvmModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = np.unique(y)
    if K is None:
        K = kernel_matrix(X, X, kernel, rbf_gamma)
    if classes.size == 2:
        # one machine suffices; mirror it so argmax over two columns works
        m = fit_binary(K, np.where(y == classes[1], 1, -1), C, tol)
        neg = BinarySvm(m.alpha, -m.y, -m.rho, m.C, m.iterations)
        machines = [neg, m]
    else:
        machines = [fit_binary(K, np.where(y == c, 1, -1), C, tol) for c in classes]
    return SvmModel(kernel, float(C), float(rbf_gamma), classes, X, machines)
