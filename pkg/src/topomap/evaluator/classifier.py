"""Feed-forward pseudo-label classifier trained with class-weighted cross-entropy."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

log = logging.getLogger(__name__)

_ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0).astype(z.dtype)),
    "tanh": (np.tanh, lambda z, a: 1.0 - a ** 2),
}


@dataclass(frozen=True)
class ClassifierSpec:
    hidden_layers: tuple = (128, 64)
    activation: str = "relu"
    epochs: int = 50
    batch: int = 64
    learning_rate: float = 1e-3
    early_stop_patience: int = 5
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict | None) -> "ClassifierSpec":
        d = dict(d or {})
        if "hidden_layers" in d:
            d["hidden_layers"] = tuple(d["hidden_layers"])
        return cls(**d)

    def with_seed(self, seed):
        return replace(self, seed=seed)


def class_weights(labels, classes) -> np.ndarray:
    """total / (k * count(c)) for every class in ``classes``."""
    labels = np.asarray(labels)
    counts = np.array([np.sum(labels == c) for c in classes], dtype=np.float64)
    return len(labels) / (len(classes) * counts)


@dataclass
class ClassifierModel:
    classes: np.ndarray
    weights: list
    biases: list
    activation: str
    mean: np.ndarray
    scale: np.ndarray
    class_weights: np.ndarray
    history: dict = field(default_factory=dict)

    def _forward(self, X):
        act = _ACTIVATIONS[self.activation][0]
        a = (np.asarray(X, dtype=np.float64) - self.mean) / self.scale
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = act(a @ W + b)
        return a @ self.weights[-1] + self.biases[-1]

    def predict_proba(self, X):
        return _softmax(self._forward(X))

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self._forward(X), axis=1)]


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _weighted_ce(logits, y_idx, w):
    p = _softmax(logits)
    nll = -np.log(np.maximum(p[np.arange(len(y_idx)), y_idx], 1e-300))
    return float(np.sum(w[y_idx] * nll) / len(y_idx)), p


def train_classifier(X_train, y_train, spec: ClassifierSpec = ClassifierSpec(),
                     X_valid=None, y_valid=None) -> ClassifierModel:
    """Train on (X_train, y_train); early-stop on validation loss when given.

    Labels absent from the training rows cannot be learned and are dropped
    with a warning; validation rows carrying them are ignored.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    classes = np.unique(y_train)
    if len(classes) < 2:
        raise ValueError("pseudo-labels must cover at least 2 clusters on the training rows")
    index = {int(c): i for i, c in enumerate(classes)}
    y_idx = np.array([index[int(c)] for c in y_train])
    cw = class_weights(y_train, classes)

    has_valid = X_valid is not None and len(X_valid) > 0
    if has_valid:
        y_valid = np.asarray(y_valid, dtype=np.int64)
        keep = np.isin(y_valid, classes)
        dropped = sorted(set(y_valid[~keep].tolist()))
        if dropped:
            log.warning("clusters %s have no training rows; dropped from the label set", dropped)
        Xv = np.asarray(X_valid, dtype=np.float64)[keep]
        yv = np.array([index[int(c)] for c in y_valid[keep]], dtype=np.int64)
        has_valid = len(yv) > 0

    rng = np.random.default_rng(spec.seed)
    mean = X_train.mean(axis=0)
    scale = X_train.std(axis=0)
    scale[scale == 0] = 1.0
    Xs = (X_train - mean) / scale
    if has_valid:
        Xvs = (Xv - mean) / scale

    act, dact = _ACTIVATIONS[spec.activation]
    sizes = [X_train.shape[1], *spec.hidden_layers, len(classes)]
    gain = 2.0 if spec.activation == "relu" else 1.0
    Ws = [rng.normal(0.0, np.sqrt(gain / fan_in), size=(fan_in, fan_out))
          for fan_in, fan_out in zip(sizes[:-1], sizes[1:])]
    bs = [np.zeros(fan_out) for fan_out in sizes[1:]]
    params = Ws + bs
    m1 = [np.zeros_like(p) for p in params]
    m2 = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-7
    step = 0

    def forward(X):
        zs, acts = [], [X]
        a = X
        for W, b in zip(Ws[:-1], bs[:-1]):
            z = a @ W + b
            a = act(z)
            zs.append(z)
            acts.append(a)
        return zs, acts, a @ Ws[-1] + bs[-1]

    history = {"loss": [], "val_loss": []}
    best_loss, best_params, waited = np.inf, None, 0
    n = len(Xs)
    L = len(Ws)
    for _ in range(spec.epochs):
        order = rng.permutation(n)
        for start in range(0, n, spec.batch):
            idx = order[start:start + spec.batch]
            zs, acts, logits = forward(Xs[idx])
            p = _softmax(logits)
            yb = y_idx[idx]
            wb = cw[yb]
            g = p.copy()
            g[np.arange(len(idx)), yb] -= 1.0
            g *= (wb / len(idx))[:, None]
            grads_W, grads_b = [None] * L, [None] * L
            for layer in range(L - 1, -1, -1):
                grads_W[layer] = acts[layer].T @ g
                grads_b[layer] = g.sum(axis=0)
                if layer > 0:
                    g = (g @ Ws[layer].T) * dact(zs[layer - 1], acts[layer])
            step += 1
            for i, (p_, gr) in enumerate(zip(params, grads_W + grads_b)):
                m1[i] = beta1 * m1[i] + (1 - beta1) * gr
                m2[i] = beta2 * m2[i] + (1 - beta2) * gr * gr
                mhat = m1[i] / (1 - beta1 ** step)
                vhat = m2[i] / (1 - beta2 ** step)
                p_ -= spec.learning_rate * mhat / (np.sqrt(vhat) + eps)

        train_loss, _ = _weighted_ce(forward(Xs)[2], y_idx, cw)
        history["loss"].append(train_loss)
        monitored = train_loss
        if has_valid:
            monitored, _ = _weighted_ce(forward(Xvs)[2], yv, cw)
            history["val_loss"].append(monitored)
        if monitored < best_loss - 1e-12:
            best_loss, waited = monitored, 0
            best_params = [p.copy() for p in params]
        else:
            waited += 1
            if waited >= spec.early_stop_patience:
                break

    if best_params is not None:
        Ws = best_params[:L]
        bs = best_params[L:]
    return ClassifierModel(
        classes=classes,
        weights=Ws,
        biases=bs,
        activation=spec.activation,
        mean=mean,
        scale=scale,
        class_weights=cw,
        history=history,
    )
