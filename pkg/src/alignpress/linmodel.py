"""Plain fixed-rate gradient-descent logistic regression, binary and
multinomial. Shared by the politics page classifier and the ideology linear
probe. Loss/gradient functions are exposed separately so tests can check the
analytic gradients against finite differences.
"""

from __future__ import annotations

import numpy as np

from .corpus import DataError


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss_grad(weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray):
    """Mean log-loss over (X, y) with y in {0,1}, plus exact gradients."""
    z = X @ weights + bias
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    resid = sigmoid(z) - y
    grad_w = X.T @ resid / len(y)
    grad_b = float(np.mean(resid))
    return loss, grad_w, grad_b


def fit_logistic(X: np.ndarray, y: np.ndarray, lr: float = 2.0, epochs: int = 400):
    """Deterministic batch gradient descent from a zero start."""
    if len(set(np.asarray(y).tolist())) < 2:
        raise DataError("logistic regression needs both classes present")
    if len(y) < 2:
        raise DataError("logistic regression needs at least 2 examples")
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(epochs):
        _, gw, gb = logistic_loss_grad(w, b, X, y)
        w -= lr * gw
        b -= lr * gb
    return w, b


def softmax_loss_grad(W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray):
    """Mean cross-entropy for multinomial regression; y holds class indices."""
    logits = X @ W + b
    logits -= logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(logits).sum(axis=1))
    n = len(y)
    loss = float(np.mean(logz - logits[np.arange(n), y]))
    probs = np.exp(logits - logz[:, None])
    probs[np.arange(n), y] -= 1.0
    grad_W = X.T @ probs / n
    grad_b = probs.mean(axis=0)
    return loss, grad_W, grad_b


def fit_softmax(X: np.ndarray, y: np.ndarray, n_classes: int, lr: float = 2.0, epochs: int = 400):
    if len(set(np.asarray(y).tolist())) < 2:
        raise DataError("softmax regression needs at least 2 classes present")
    W = np.zeros((X.shape[1], n_classes))
    b = np.zeros(n_classes)
    for _ in range(epochs):
        _, gW, gb = softmax_loss_grad(W, b, X, y)
        W -= lr * gW
        b -= lr * gb
    return W, b
