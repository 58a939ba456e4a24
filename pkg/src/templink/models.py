"""Logistic regression and a ReLU multilayer perceptron, both in plain numpy.

Both models emit a single link probability per pair row. Losses are the mean
binary cross-entropy plus an L2 penalty scaled by ``1 / n_samples``.
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

log = logging.getLogger(__name__)

DEFAULT_ARCH = (13, 13, 13, 13, 13)
PROBA_EPS = 1e-15
MAGIC = b"TLMODEL1"


def _check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if not np.isfinite(X).all():
        raise ValueError("non-finite features")
    if X.shape[0] != y.size:
        raise ValueError("X and y lengths differ")
    if np.unique(y).size < 2:
        raise ValueError("degenerate labels: need both classes")
    return X, y


def _bce(logit: np.ndarray, y: np.ndarray) -> float:
    # log(1 + e^z) - y z, stable for large |z|
    return float(np.mean(np.logaddexp(0.0, logit) - y * logit))


def _clip_proba(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROBA_EPS, 1.0 - PROBA_EPS)


# -- logistic regression ----------------------------------------------------------

@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    l2: float = 1.0
    n_iter: int = 0
    final_loss: float = float("nan")
    grad_norm: float = float("nan")
    loss_history: list = field(default_factory=list, repr=False)

    kind = "logistic"

    @property
    def n_inputs(self) -> int:
        return self.weights.size

    def decision_function(self, X) -> np.ndarray:
        X = _check_width(X, self.n_inputs)
        return np.einsum("ij,j->i", X, self.weights) + self.bias


def logistic_loss_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float):
    """Penalised mean log-loss and its gradient ``(loss, grad_w, grad_b)``."""
    n = X.shape[0]
    z = X @ w + b
    r = expit(z) - y
    loss = _bce(z, y) + 0.5 * l2 / n * float(w @ w)
    return loss, X.T @ r / n + l2 / n * w, float(r.mean())


def train_logistic(X, y, l2: float = 1.0, tol: float = 1e-6, max_iter: int = 10_000,
                   init: tuple[np.ndarray, float] | None = None) -> LogisticModel:
    """Full-batch gradient descent with Armijo backtracking.

    The trial step of each iteration is the Barzilai-Borwein step (the first
    one is 1); it is halved until the sufficient-decrease condition holds, so
    the loss never increases. Stops when the gradient norm drops below ``tol``.
    """
    X, y = _check_xy(X, y)
    d = X.shape[1]
    theta = np.zeros(d + 1) if init is None else np.concatenate([init[0], [init[1]]]).astype(np.float64)

    def f(th):
        loss, gw, gb = logistic_loss_grad(th[:-1], th[-1], X, y, l2)
        return loss, np.concatenate([gw, [gb]])

    loss, g = f(theta)
    history = [loss]
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        gnorm2 = float(g @ g)
        if np.sqrt(gnorm2) < tol:
            it -= 1
            break
        a = step
        while True:
            cand = theta - a * g
            c_loss, c_g = f(cand)
            if c_loss <= loss - 1e-4 * a * gnorm2 or a < 1e-20:
                break
            a *= 0.5
        s, dg = cand - theta, c_g - g
        sy = float(s @ dg)
        step = float(s @ s) / sy if sy > 0 else 1.0
        theta, loss, g = cand, c_loss, c_g
        history.append(loss)
    return LogisticModel(theta[:-1].copy(), float(theta[-1]), l2, it, loss,
                         float(np.linalg.norm(g)), history)


# -- multilayer perceptron ----------------------------------------------------------

@dataclass
class MlpModel:
    """ReLU hidden layers and one sigmoid output unit.

    ``weights[i]`` has shape ``(sizes[i], sizes[i + 1])``.
    """

    weights: list
    biases: list
    seed: int = 0
    alpha: float = 1e-4
    epochs_run: int = 0
    best_loss: float = float("nan")
    loss_history: list = field(default_factory=list, repr=False)
    val_history: list = field(default_factory=list, repr=False)

    kind = "mlp"

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    def forward(self, X: np.ndarray, rowwise: bool = False):
        """Return the output logits and the list of layer activations.

        ``rowwise=True`` evaluates each row with a fixed reduction order, so a
        row's output does not depend on the other rows in the batch (BLAS
        kernels do not promise that).
        """
        acts = [X]
        h = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = (np.einsum("ij,jk->ik", h, W) if rowwise else h @ W) + b
            h = z if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return h[:, 0], acts

    def decision_function(self, X) -> np.ndarray:
        X = _check_width(X, self.n_inputs)
        return self.forward(X, rowwise=True)[0]


def init_mlp(n_inputs: int, arch=DEFAULT_ARCH, seed: int = 0) -> MlpModel:
    """Weights and biases drawn from ``U(-r, r)`` with ``r = sqrt(6 / (fan_in + fan_out))``."""
    rng = np.random.default_rng(seed)
    sizes = [n_inputs, *arch, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, fan_out))
    return MlpModel(weights, biases, seed)


def mlp_loss_grad(model: MlpModel, X: np.ndarray, y: np.ndarray, alpha: float):
    """Penalised mean BCE on a batch and its backprop gradients.

    Returns ``(loss, grad_weights, grad_biases)``.
    """
    n = X.shape[0]
    logit, acts = model.forward(X)
    loss = _bce(logit, y) + 0.5 * alpha / n * sum(float(np.sum(W * W)) for W in model.weights)
    delta = ((expit(logit) - y) / n)[:, None]
    gW = [None] * len(model.weights)
    gb = [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        gW[i] = acts[i].T @ delta + alpha / n * model.weights[i]
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ model.weights[i].T) * (acts[i] > 0)
    return loss, gW, gb


def train_mlp(X, y, arch=DEFAULT_ARCH, seed: int = 0, *, X_val=None, y_val=None,
              lr: float = 1e-3, batch_size: int = 200, max_epochs: int = 200,
              alpha: float = 1e-4, patience: int = 10, tol: float = 1e-4,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> MlpModel:
    """Mini-batch Adam on the penalised cross-entropy.

    Early stopping watches the validation loss when a validation set is given
    (training loss otherwise): after ``patience`` epochs without an improvement
    of at least ``tol`` training stops and the best parameters are restored.
    """
    X, y = _check_xy(X, y)
    model = init_mlp(X.shape[1], arch, seed)
    model.alpha = alpha
    if max_epochs <= 0:
        return model
    use_val = X_val is not None
    if use_val:
        X_val = np.asarray(X_val, dtype=np.float64)
        y_val = np.asarray(y_val, dtype=np.float64).ravel()
    rng = np.random.default_rng(seed + 1)
    params = model.weights + model.biases
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    t = 0
    n = X.shape[0]
    bs = min(batch_size, n)
    best = np.inf
    best_params = [p.copy() for p in params]
    stall = 0
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(n)
        run = 0.0
        for lo in range(0, n, bs):
            idx = order[lo:lo + bs]
            loss, gW, gb = mlp_loss_grad(model, X[idx], y[idx], alpha)
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"NaN loss at epoch {epoch}, batch {lo // bs}: "
                    f"max |w| = {max(float(np.abs(w).max()) for w in model.weights):.3g}")
            run += loss * idx.size
            t += 1
            grads = gW + gb
            lr_t = lr * np.sqrt(1 - beta2 ** t) / (1 - beta1 ** t)
            for p, g, mi, vi in zip(params, grads, m, v):
                mi *= beta1
                mi += (1 - beta1) * g
                vi *= beta2
                vi += (1 - beta2) * g * g
                p -= lr_t * mi / (np.sqrt(vi) + eps)
        model.loss_history.append(run / n)
        if use_val:
            score = _bce(model.forward(X_val)[0], y_val)
            model.val_history.append(score)
        else:
            score = model.loss_history[-1]
        if score < best - tol:
            best = score
            best_params = [p.copy() for p in params]
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                break
    k = len(model.weights)
    for p, bp in zip(params, best_params):
        p[...] = bp
    model.weights, model.biases = params[:k], params[k:]
    model.epochs_run = epoch
    model.best_loss = float(best)
    return model


# -- inference and inspection ----------------------------------------------------------

def _check_width(X, width: int) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != width:
        raise ValueError(f"feature width {X.shape[1]} does not match model input {width}")
    return X


def predict_proba(model, X, block: int = 1 << 16) -> np.ndarray:
    """Per-row link probability, computed in row blocks."""
    X = _check_width(X, model.n_inputs)
    out = np.empty(X.shape[0])
    for lo in range(0, X.shape[0], block):
        out[lo:lo + block] = expit(model.decision_function(X[lo:lo + block]))
    return _clip_proba(out)


def feature_report(model: LogisticModel, names) -> list[tuple[int, str, float]]:
    """Columns sorted by ``|weight|`` (descending), ties by column index."""
    w = np.asarray(model.weights)
    order = np.lexsort((np.arange(w.size), -np.abs(w)))
    return [(int(i), names[i], float(w[i])) for i in order]


def format_report(rows, top: int | None = None) -> str:
    lines = [f"{'rank':>4}  {'feature':<28} {'weight':>10}"]
    for r, (i, name, w) in enumerate(rows[:top] if top else rows, 1):
        lines.append(f"{r:>4}  {name:<28} {w:>+10.4f}")
    return "\n".join(lines)


# -- persistence -------------------------------------------------------------------

def save_model(model, path) -> None:
    """Binary: magic, kind byte, layer count, sizes, seed, then float64 params.

    Metadata (training summary) goes to ``<path>.json``.
    """
    if isinstance(model, LogisticModel):
        kind, sizes, seed = 0, [model.n_inputs, 1], 0
        params = [model.weights, np.array([model.bias])]
        meta = {"kind": "logistic", "l2": model.l2, "n_iter": model.n_iter,
                "final_loss": model.final_loss, "grad_norm": model.grad_norm}
    else:
        kind, sizes, seed = 1, model.sizes, model.seed
        params = [p for pair in zip(model.weights, model.biases) for p in pair]
        meta = {"kind": "mlp", "arch": model.sizes[1:-1], "seed": model.seed, "alpha": model.alpha,
                "epochs_run": model.epochs_run, "best_loss": model.best_loss}
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BI", kind, len(sizes)))
        fh.write(struct.pack(f"<{len(sizes)}q", *sizes))
        fh.write(struct.pack("<q", seed))
        for p in params:
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=1))


def load_model(path):
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ValueError(f"{path}: not a model file")
    kind, n_sizes = struct.unpack("<BI", data[8:13])
    off = 13
    sizes = list(struct.unpack(f"<{n_sizes}q", data[off:off + 8 * n_sizes]))
    off += 8 * n_sizes
    (seed,) = struct.unpack("<q", data[off:off + 8])
    off += 8
    flat = np.frombuffer(data[off:], dtype="<f8").astype(np.float64)
    meta_path = Path(str(path) + ".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    if kind == 0:
        d = sizes[0]
        return LogisticModel(flat[:d].copy(), float(flat[d]), meta.get("l2", 1.0),
                             meta.get("n_iter", 0), meta.get("final_loss", float("nan")),
                             meta.get("grad_norm", float("nan")))
    weights, biases = [], []
    pos = 0
    for a, b in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[pos:pos + a * b].reshape(a, b).copy())
        pos += a * b
        biases.append(flat[pos:pos + b].copy())
        pos += b
    return MlpModel(weights, biases, int(seed), meta.get("alpha", 1e-4),
                    meta.get("epochs_run", 0), meta.get("best_loss", float("nan")))
