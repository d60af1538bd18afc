"""Single-hidden-layer autoencoder trained with Adam, written against numpy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3", "W4", "b4")


def init_params(input_dim: int, hidden_dim: int, latent_dim: int, rng) -> dict[str, np.ndarray]:
    def he(fan_in, fan_out):
        return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))

    return {
        "W1": he(input_dim, hidden_dim), "b1": np.zeros(hidden_dim),
        "W2": he(hidden_dim, latent_dim), "b2": np.zeros(latent_dim),
        "W3": he(latent_dim, hidden_dim), "b3": np.zeros(hidden_dim),
        "W4": he(hidden_dim, input_dim), "b4": np.zeros(input_dim),
    }


def encode(params, X):
    h1 = np.maximum(X @ params["W1"] + params["b1"], 0.0)
    return h1 @ params["W2"] + params["b2"]


def forward(params, X):
    a1 = X @ params["W1"] + params["b1"]
    h1 = np.maximum(a1, 0.0)
    z = h1 @ params["W2"] + params["b2"]
    a3 = z @ params["W3"] + params["b3"]
    h3 = np.maximum(a3, 0.0)
    out = h3 @ params["W4"] + params["b4"]
    return out, (a1, h1, z, a3, h3)


def loss_and_grads(params, X):
    """Mean squared reconstruction error over all entries and its gradients."""
    out, (a1, h1, z, a3, h3) = forward(params, X)
    diff = out - X
    loss = float(np.mean(diff ** 2))
    d_out = 2.0 * diff / diff.size
    g = {"W4": h3.T @ d_out, "b4": d_out.sum(axis=0)}
    d_a3 = (d_out @ params["W4"].T) * (a3 > 0)
    g["W3"] = z.T @ d_a3
    g["b3"] = d_a3.sum(axis=0)
    d_z = d_a3 @ params["W3"].T
    g["W2"] = h1.T @ d_z
    g["b2"] = d_z.sum(axis=0)
    d_a1 = (d_z @ params["W2"].T) * (a1 > 0)
    g["W1"] = X.T @ d_a1
    g["b1"] = d_a1.sum(axis=0)
    return loss, g


@dataclass
class Autoencoder:
    params: dict[str, np.ndarray]
    initial_loss: float
    loss_history: list[float] = field(default_factory=list)

    def encode(self, X) -> np.ndarray:
        return encode(self.params, np.asarray(X, dtype=float))

    def reconstruct(self, X) -> np.ndarray:
        return forward(self.params, np.asarray(X, dtype=float))[0]

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1] if self.loss_history else self.initial_loss


def autoencoder_fit(vectors, latent_dim: int = 32, hidden_dim: int | None = None,
                    epochs: int = 200, lr: float = 1e-3, batch_size: int = 32,
                    seed: int = 0, beta1: float = 0.9, beta2: float = 0.999,
                    eps: float = 1e-8) -> Autoencoder:
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("autoencoder needs at least 2 vectors")
    n, d = X.shape
    if d <= latent_dim:
        raise ValueError(f"input dim {d} must exceed latent dim {latent_dim}")
    hidden_dim = hidden_dim or (d + latent_dim) // 2
    rng = np.random.default_rng(seed)
    params = init_params(d, hidden_dim, latent_dim, rng)
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(val) for k, val in params.items()}

    initial = loss_and_grads(params, X)[0]
    history = []
    step = 0
    for _ in range(epochs):
        order = rng.permutation(n)
        for lo in range(0, n, batch_size):
            batch = X[order[lo:lo + batch_size]]
            _, grads = loss_and_grads(params, batch)
            step += 1
            c1 = 1 - beta1 ** step
            c2 = 1 - beta2 ** step
            for k in PARAM_NAMES:
                m[k] = beta1 * m[k] + (1 - beta1) * grads[k]
                v[k] = beta2 * v[k] + (1 - beta2) * grads[k] ** 2
                params[k] -= lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + eps)
        history.append(float(np.mean((forward(params, X)[0] - X) ** 2)))
    return Autoencoder(params, float(initial), history)
