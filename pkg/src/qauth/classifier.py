"""Small feedforward network that separates legitimate transcripts from forgeries.

Transcripts are compressed to block means (10 consecutive bits per feature)
and fed to a ReLU network with a logistic output, trained with binary
cross-entropy and Adam. Everything is plain numpy so training is bit-exact
for a fixed seed.
"""

from __future__ import annotations

import copy
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_SIZES = (10, 15, 15, 1)
BLOCK = 10

# alternatives to the [15, 15] hidden layout evaluated during model selection
DEFAULT_CANDIDATES = (
    (10, 15, 15, 1),
    (10, 8, 1),
    (10, 30, 1),
    (10, 10, 10, 10, 1),
    (10, 32, 16, 1),
)


@dataclass
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class MlpModel:
    """Weights, biases and Adam moment estimates for a ReLU/sigmoid network."""

    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    m_w: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)
    step: int = 0

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("layer count does not match sizes")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[k], self.sizes[k + 1]) or b.shape != (self.sizes[k + 1],):
                raise ValueError(f"layer {k} has shapes {w.shape}, {b.shape}")
        if not self.m_w:
            self.reset_optimizer()

    def reset_optimizer(self) -> None:
        self.m_w = [np.zeros_like(w) for w in self.weights]
        self.v_w = [np.zeros_like(w) for w in self.weights]
        self.m_b = [np.zeros_like(b) for b in self.biases]
        self.v_b = [np.zeros_like(b) for b in self.biases]
        self.step = 0

    def copy(self) -> "MlpModel":
        return copy.deepcopy(self)

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.weights + self.biases)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


def init_model(sizes: Sequence[int] = DEFAULT_SIZES, rng: np.random.Generator | None = None,
               zero_output: bool = True) -> MlpModel:
    """He-normal hidden layers; the output layer starts at zero so p = 1/2 everywhere."""
    rng = rng if rng is not None else np.random.default_rng(0)
    sizes = tuple(sizes)
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    weights, biases = [], []
    for k in range(len(sizes) - 1):
        fan_in, fan_out = sizes[k], sizes[k + 1]
        last = k == len(sizes) - 2
        if last and zero_output:
            w = np.zeros((fan_in, fan_out))
        else:
            w = rng.standard_normal((fan_in, fan_out)) * math.sqrt(2.0 / fan_in)
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return MlpModel(sizes, weights, biases)


# -- data ---------------------------------------------------------------------

def preprocess(S, block: int = BLOCK) -> np.ndarray:
    """Average consecutive ``block`` bits; shape (lambda/block,) or (n, lambda/block)."""
    s = np.asarray(S, dtype=float)
    lam = s.shape[-1]
    if lam == 0 or lam % block:
        raise ValueError(f"transcript length {lam} is not a positive multiple of {block}")
    return s.reshape(s.shape[:-1] + (lam // block, block)).mean(axis=-1)


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("features must be (n, k) with one label per row")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.y.size

    def split(self, val_fraction: float, rng: np.random.Generator) -> tuple["Dataset", "Dataset"]:
        idx = rng.permutation(len(self))
        n_val = int(round(val_fraction * len(self)))
        val, tr = idx[:n_val], idx[n_val:]
        return (Dataset(self.X[tr], self.y[tr], self.provenance),
                Dataset(self.X[val], self.y[val], self.provenance))

    def to_csv(self) -> str:
        buf = io.StringIO()
        k = self.X.shape[1]
        buf.write(",".join([f"f{i}" for i in range(k)] + ["label"]) + "\n")
        for row, lab in zip(self.X, self.y):
            buf.write(",".join(format(v, ".17g") for v in row) + f",{int(lab)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, provenance: str = "") -> "Dataset":
        rows = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
        return cls(rows[:, :-1], rows[:, -1], provenance)


# -- network ----------------------------------------------------------------------

def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _forward_cache(model: MlpModel, X: np.ndarray):
    acts = [X]
    pre = []
    a = X
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        pre.append(z)
        a = _sigmoid(z) if k == last else np.maximum(z, 0.0)
        acts.append(a)
    return pre, acts


def forward(model: MlpModel, features) -> np.ndarray:
    """Output probabilities for one feature vector or a batch of them."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[1] != model.sizes[0]:
        raise ValueError(f"expected {model.sizes[0]} features, got {X.shape[1]}")
    _, acts = _forward_cache(model, X)
    return acts[-1][:, 0]


def logits(model: MlpModel, X: np.ndarray) -> np.ndarray:
    pre, _ = _forward_cache(model, np.atleast_2d(X))
    return pre[-1][:, 0]


def cross_entropy(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    z = logits(model, X)
    # log(1 + e^z) - y z, computed stably
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def loss_and_grads(model: MlpModel, X: np.ndarray, y: np.ndarray):
    """Mean binary cross-entropy and its gradients by backpropagation."""
    pre, acts = _forward_cache(model, X)
    n = X.shape[0]
    z = pre[-1][:, 0]
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    delta = ((acts[-1][:, 0] - y) / n)[:, None]
    gw, gb = [None] * len(model.weights), [None] * len(model.weights)
    for k in range(len(model.weights) - 1, -1, -1):
        gw[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ model.weights[k].T) * (pre[k - 1] > 0)
    return loss, gw, gb


def adam_step(model: MlpModel, gw, gb, cfg: AdamConfig) -> None:
    model.step += 1
    t = model.step
    c1 = 1 - cfg.beta1 ** t
    c2 = 1 - cfg.beta2 ** t
    for params, grads, ms, vs in ((model.weights, gw, model.m_w, model.v_w),
                                  (model.biases, gb, model.m_b, model.v_b)):
        for p, g, m, v in zip(params, grads, ms, vs):
            m *= cfg.beta1
            m += (1 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1 - cfg.beta2) * g * g
            p -= cfg.lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)


# -- evaluation -----------------------------------------------------------------------

@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    cross_entropy: float
    roc_points: np.ndarray = field(repr=False)
    auc: float


def roc_curve(scores, labels) -> np.ndarray:
    """ROC points (fpr, tpr) sweeping the threshold over every distinct score."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos, n_neg = labels.sum(), (~labels).sum()
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both labels present")
    order = np.argsort(-scores, kind="mergesort")
    s, lab = scores[order], labels[order]
    tp = np.cumsum(lab)
    fp = np.cumsum(~lab)
    # keep the last index of each run of tied scores
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    fpr = np.r_[0.0, fp[last] / n_neg]
    tpr = np.r_[0.0, tp[last] / n_pos]
    return np.column_stack([fpr, tpr])


def auc_trapezoid(points: np.ndarray) -> float:
    return float(np.trapezoid(points[:, 1], points[:, 0]))


def evaluate_scores(scores, labels, threshold: float = 0.5) -> EvalReport:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    p = np.clip(scores, 1e-15, 1 - 1e-15)
    ce = float(-np.mean(labels * np.log(p) + (1 - labels) * np.log(1 - p)))
    acc = float(np.mean((scores >= threshold) == (labels == 1)))
    pts = roc_curve(scores, labels)
    return EvalReport(acc, ce, pts, auc_trapezoid(pts))


def evaluate(model: MlpModel, dataset: Dataset) -> EvalReport:
    rep = evaluate_scores(forward(model, dataset.X), dataset.y)
    # exact cross-entropy from logits, free of the clipping above
    return EvalReport(rep.accuracy, cross_entropy(model, dataset.X, dataset.y),
                      rep.roc_points, rep.auc)


def roc_and_auc(model: MlpModel, dataset: Dataset) -> EvalReport:
    return evaluate(model, dataset)


# -- training -------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainResult:
    model: MlpModel
    train_curve: list[EvalReport]
    val_curve: list[EvalReport]
    train_set: Dataset
    val_set: Dataset


def train(model: MlpModel, dataset: Dataset, epochs: int = 100,
          rng: np.random.Generator | None = None, *, val_fraction: float = 0.2,
          batch_size: int = 32, adam: AdamConfig | None = None,
          validation: Dataset | None = None) -> TrainResult:
    """Train a copy of ``model`` with mini-batch Adam.

    The dataset is split train/validation by a seeded shuffle unless an explicit
    ``validation`` set is passed, in which case all of ``dataset`` is trained on.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    rng = rng if rng is not None else np.random.default_rng(0)
    adam = adam or AdamConfig()
    if validation is None:
        tr, val = dataset.split(val_fraction, rng)
    else:
        tr, val = dataset, validation
    model = model.copy()
    train_curve, val_curve = [], []
    n = len(tr)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            _, gw, gb = loss_and_grads(model, tr.X[idx], tr.y[idx])
            adam_step(model, gw, gb, adam)
        train_curve.append(evaluate(model, tr))
        if len(val):
            val_curve.append(evaluate(model, val))
    return TrainResult(model, train_curve, val_curve, tr, val)


def gradient_check(model: MlpModel, X, y, h: float = 1e-5, floor: float = 1e-6) -> float:
    """Largest relative gap between backprop and central-difference gradients.

    The gap is divided by ``max(|analytic| + |numeric|, floor)``; the floor
    keeps gradients near the finite-difference round-off level (about
    ``eps * loss / h``) from dominating. Parameters whose perturbation moves a
    hidden pre-activation across the ReLU kink are skipped.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    _, gw, gb = loss_and_grads(model, X, y)
    work = model.copy()
    worst = 0.0

    def pattern():
        pre, _ = _forward_cache(work, X)
        return [z > 0 for z in pre[:-1]]

    base = pattern()
    for params, grads in ((work.weights, gw), (work.biases, gb)):
        for p, g in zip(params, grads):
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + h
                lp = cross_entropy(work, X, y)
                up = pattern()
                p[idx] = old - h
                lm = cross_entropy(work, X, y)
                down = pattern()
                p[idx] = old
                if any((a != b).any() or (a != c).any() for a, b, c in zip(base, up, down)):
                    continue
                num = (lp - lm) / (2 * h)
                ana = g[idx]
                denom = max(abs(num) + abs(ana), floor)
                worst = max(worst, abs(num - ana) / denom)
    return worst


def hyperparameter_select(candidates: Iterable[Sequence[int]], dataset: Dataset,
                          rng: np.random.Generator | None = None, epochs: int = 100,
                          validation: Dataset | None = None, **train_kw):
    """Train each architecture and keep the best on validation accuracy.

    Ties go to lower validation cross-entropy, then to the earlier candidate.
    Every candidate sees the same split and the same seed.
    """
    candidates = [tuple(c) for c in candidates]
    if len(candidates) < 2:
        raise ValueError("need at least two candidate architectures")
    seed = int((rng if rng is not None else np.random.default_rng(0)).integers(2**63))
    results = []
    for sizes in candidates:
        r = np.random.default_rng(seed)
        model = init_model(sizes, r)
        results.append(train(model, dataset, epochs, r, validation=validation, **train_kw))
    scores = [(-res.val_curve[-1].accuracy, res.val_curve[-1].cross_entropy, i)
              for i, res in enumerate(results)]
    best = min(scores)[2]
    return results[best], results


# -- weight files -----------------------------------------------------------------------

def dumps_weights(model: MlpModel) -> str:
    """Layer-tagged text: ``sizes`` header, then one ``W<k>`` row per input unit and a ``b<k>`` row."""
    lines = ["sizes " + " ".join(str(s) for s in model.sizes)]
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        for row in w:
            lines.append(f"W{k} " + " ".join(format(v, ".17g") for v in row))
        lines.append(f"b{k} " + " ".join(format(v, ".17g") for v in b))
    return "\n".join(lines) + "\n"


def loads_weights(text: str) -> MlpModel:
    sizes = None
    rows: dict[str, list[list[float]]] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        tag, *vals = line.split()
        if tag == "sizes":
            sizes = tuple(int(v) for v in vals)
        else:
            rows.setdefault(tag, []).append([float(v) for v in vals])
    if sizes is None:
        raise ValueError("weight file lacks a sizes header")
    n = len(sizes) - 1
    weights = [np.array(rows[f"W{k}"], dtype=float).reshape(sizes[k], sizes[k + 1]) for k in range(n)]
    biases = [np.array(rows[f"b{k}"][0], dtype=float) for k in range(n)]
    return MlpModel(sizes, weights, biases)
