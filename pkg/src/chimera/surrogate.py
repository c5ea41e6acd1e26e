"""Residual-MLP surrogates over the design space, in plain numpy.

Two head configurations share one trunk: a non-residual projection layer
(inputs -> width, ReLU) followed by residual blocks out = ReLU(Wx+b) + x,
then either a linear regression head (aero targets, standardized) or a
classification head of 10 independent 3-way softmax groups (stability
labels). Training is mini-batch Adam (or plain gradient descent) with an
optional L2 penalty on the weight matrices; gradients are hand-derived
reverse mode.

Model files: magic "CHM1", a version byte, a JSON header (config, scaling,
head metadata, training history), then the weight tensors as little-endian
float64 in declaration order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import ScalingSpec
from .errors import FileFormatError, InvalidInputError, TrainingDivergedError
from .geometry import DesignVector
from .stability import StabilityReport, TESTED_DERIVATIVES

_MAGIC = b"CHM1"
_VERSION = 1


@dataclass(frozen=True)
class MlpConfig:
    """Network and training settings.

    ``hidden_layers`` counts all hidden layers including the projection
    layer; with residual=True every layer after the first is a residual
    block. ``head`` is "regression" (n_outputs values) or "classification"
    (n_groups x n_classes logits).
    """

    n_inputs: int = 8
    hidden_layers: int = 4
    width: int = 64
    residual: bool = True
    head: str = "regression"
    n_outputs: int = 4
    n_groups: int = 10
    n_classes: int = 3
    l2: float = 0.0
    learning_rate: float = 1e-3
    lr_schedule: str = "constant"
    batch_size: int = 256
    epochs: int = 200
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.head not in ("regression", "classification"):
            raise InvalidInputError(f"unknown head {self.head!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise InvalidInputError(f"unknown optimizer {self.optimizer!r}")
        if self.lr_schedule not in ("constant", "cosine"):
            raise InvalidInputError(f"unknown lr_schedule {self.lr_schedule!r}")
        if min(self.n_inputs, self.width, self.n_outputs, self.n_groups,
               self.n_classes, self.batch_size, self.epochs) < 1:
            raise InvalidInputError("counts must be >= 1")
        if self.hidden_layers < 0:
            raise InvalidInputError("hidden_layers must be >= 0")
        if self.l2 < 0.0 or self.learning_rate <= 0.0:
            raise InvalidInputError("l2 must be >= 0 and learning_rate > 0")

    @property
    def out_dim(self) -> int:
        return self.n_outputs if self.head == "regression" else self.n_groups * self.n_classes

    def layer_shapes(self) -> list:
        """[(in, out)] for every weight matrix, trunk then head."""
        shapes = []
        prev = self.n_inputs
        for _ in range(self.hidden_layers):
            shapes.append((prev, self.width))
            prev = self.width
        shapes.append((prev, self.out_dim))
        return shapes


def init_params(config: MlpConfig) -> list:
    """He-initialized (W, b) pairs, deterministic per config.seed."""
    rng = np.random.default_rng(config.seed)
    params = []
    for n_in, n_out in config.layer_shapes():
        w = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_out))
        params.append((w, np.zeros(n_out)))
    return params


def _check_params(params, config: MlpConfig) -> None:
    shapes = config.layer_shapes()
    if len(params) != len(shapes):
        raise InvalidInputError(f"expected {len(shapes)} layers, got {len(params)}")
    for (w, b), (n_in, n_out) in zip(params, shapes):
        if w.shape != (n_in, n_out) or b.shape != (n_out,):
            raise InvalidInputError(
                f"layer shape mismatch: {w.shape}/{b.shape} vs ({n_in},{n_out})")


def forward(params, x, config: MlpConfig, cache: Optional[list] = None) -> np.ndarray:
    """Raw head outputs for a batch of normalized inputs (n, n_inputs)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != config.n_inputs:
        raise InvalidInputError(f"expected {config.n_inputs} inputs, got {x.shape[1]}")
    _check_params(params, config)
    h = x
    for i in range(config.hidden_layers):
        w, b = params[i]
        z = h @ w + b
        a = np.maximum(z, 0.0)
        out = a + h if (config.residual and i > 0) else a
        if cache is not None:
            cache.append((h, z))
        h = out
    w, b = params[-1]
    if cache is not None:
        cache.append((h, None))
    return h @ w + b


def group_softmax(logits: np.ndarray, config: MlpConfig) -> np.ndarray:
    """(n, n_groups, n_classes) probabilities from flat logits."""
    z = logits.reshape(logits.shape[0], config.n_groups, config.n_classes)
    z = z - z.max(axis=2, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=2, keepdims=True)


def _l2_penalty(params, config: MlpConfig) -> float:
    return config.l2 * sum(float((w * w).sum()) for w, _ in params)


def loss(params, x, y, config: MlpConfig) -> float:
    """MSE over all outputs (regression) or summed per-group cross-entropy
    averaged over the batch (classification), plus the L2 penalty."""
    pred = forward(params, x, config)
    if config.head == "regression":
        data = float(((pred - y) ** 2).mean())
    else:
        probs = group_softmax(pred, config)
        y = np.asarray(y, dtype=int)
        n = probs.shape[0]
        picked = probs[np.arange(n)[:, None], np.arange(config.n_groups)[None, :], y]
        data = float(-np.log(np.maximum(picked, 1e-300)).sum(axis=1).mean())
    return data + _l2_penalty(params, config)


def gradient(params, x, y, config: MlpConfig):
    """(loss, grads) with grads shaped like params."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cache: list = []
    pred = forward(params, x, config, cache=cache)
    n = x.shape[0]

    if config.head == "regression":
        diff = pred - y
        data_loss = float((diff * diff).mean())
        d_out = 2.0 * diff / diff.size
    else:
        probs = group_softmax(pred, config)
        y = np.asarray(y, dtype=int)
        picked = probs[np.arange(n)[:, None], np.arange(config.n_groups)[None, :], y]
        data_loss = float(-np.log(np.maximum(picked, 1e-300)).sum(axis=1).mean())
        one_hot = np.zeros_like(probs)
        one_hot[np.arange(n)[:, None], np.arange(config.n_groups)[None, :], y] = 1.0
        d_out = (probs - one_hot).reshape(n, -1) / n

    grads = [None] * len(params)
    w_head, _ = params[-1]
    h_last = cache[-1][0]
    grads[-1] = (h_last.T @ d_out + 2.0 * config.l2 * w_head, d_out.sum(axis=0))
    d_h = d_out @ w_head.T
    for i in range(config.hidden_layers - 1, -1, -1):
        h_in, z = cache[i]
        w, _ = params[i]
        d_z = d_h * (z > 0.0)
        grads[i] = (h_in.T @ d_z + 2.0 * config.l2 * w, d_z.sum(axis=0))
        skip = d_h if (config.residual and i > 0) else 0.0
        d_h = d_z @ w.T + skip
    return data_loss + _l2_penalty(params, config), grads


@dataclass
class AeroPrediction:
    lift: float
    drag: float
    c_lift: float
    c_drag: float
    extrapolated: bool

    def as_array(self) -> np.ndarray:
        return np.array([self.lift, self.drag, self.c_lift, self.c_drag])


AERO_TARGETS = ("lift", "drag", "c_lift", "c_drag")


@dataclass
class SurrogateModel:
    """Immutable trained network plus its scaling metadata."""

    config: MlpConfig
    params: list
    input_scaling: ScalingSpec
    target_names: tuple = ()
    target_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    target_std: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dropped_targets: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        _check_params(self.params, self.config)

    # -- prediction ---------------------------------------------------

    def _normalize_inputs(self, x) -> tuple:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = self.input_scaling.normalize(x)
        extrapolated = (x < self.input_scaling.lb).any(axis=1) | (x > self.input_scaling.ub).any(axis=1)
        return z, extrapolated

    def predict_aero_batch(self, x) -> tuple:
        """(values (n,4) in physical units, extrapolation flags (n,))."""
        if self.config.head != "regression":
            raise InvalidInputError("model has no regression head")
        z, extrapolated = self._normalize_inputs(x)
        raw = forward(self.params, z, self.config)
        phys = raw * self.target_std + self.target_mean
        out = np.empty((phys.shape[0], len(AERO_TARGETS)))
        live = {name: i for i, name in enumerate(self.target_names)}
        for j, name in enumerate(AERO_TARGETS):
            if name in live:
                out[:, j] = phys[:, live[name]]
            else:
                out[:, j] = self.dropped_targets[name]
        return out, extrapolated

    def predict_aero(self, x) -> AeroPrediction:
        x = x.as_array() if isinstance(x, DesignVector) else np.asarray(x, dtype=float)
        values, extrapolated = self.predict_aero_batch(x[None, :])
        return AeroPrediction(*(float(v) for v in values[0]), extrapolated=bool(extrapolated[0]))

    def predict_stability_batch(self, x) -> np.ndarray:
        """(n, 10) class indices; argmax per group (first index on ties,
        which is the Unstable class by construction)."""
        if self.config.head != "classification":
            raise InvalidInputError("model has no classification head")
        z, _ = self._normalize_inputs(x)
        probs = group_softmax(forward(self.params, z, self.config), self.config)
        return probs.argmax(axis=2)

    def predict_stability(self, x) -> StabilityReport:
        x = x.as_array() if isinstance(x, DesignVector) else np.asarray(x, dtype=float)
        labels = self.predict_stability_batch(x[None, :])[0]
        return StabilityReport(labels=tuple(int(v) for v in labels))

    # -- persistence ----------------------------------------------------

    def save(self, path) -> None:
        header = {
            "config": asdict(self.config),
            "input_scaling": self.input_scaling.to_dict(),
            "target_names": list(self.target_names),
            "target_mean": self.target_mean.tolist(),
            "target_std": self.target_std.tolist(),
            "dropped_targets": self.dropped_targets,
            "history": self.history,
            "meta": self.meta,
        }
        blob = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(bytes([_VERSION]))
            fh.write(np.array([len(blob)], dtype="<u4").tobytes())
            fh.write(blob)
            for w, b in self.params:
                fh.write(w.astype("<f8").tobytes())
                fh.write(b.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        raw = Path(path).read_bytes()
        if len(raw) < 9 or raw[:4] != _MAGIC:
            raise FileFormatError(f"{path}: not a CHM1 model file")
        if raw[4] != _VERSION:
            raise FileFormatError(f"{path}: unsupported model version {raw[4]}")
        (blob_len,) = np.frombuffer(raw[5:9], dtype="<u4")
        header_end = 9 + int(blob_len)
        if len(raw) < header_end:
            raise FileFormatError(f"{path}: truncated header")
        try:
            header = json.loads(raw[9:header_end].decode())
            config = MlpConfig(**header["config"])
        except (ValueError, KeyError, TypeError) as exc:
            raise FileFormatError(f"{path}: bad model header: {exc}") from exc
        shapes = config.layer_shapes()
        expected = sum(8 * (n_in * n_out + n_out) for n_in, n_out in shapes)
        if len(raw) - header_end != expected:
            raise FileFormatError(
                f"{path}: parameter payload is {len(raw) - header_end} bytes, "
                f"expected {expected}")
        params = []
        offset = header_end
        for n_in, n_out in shapes:
            n_bytes = 8 * n_in * n_out
            w = np.frombuffer(raw[offset:offset + n_bytes], dtype="<f8")
            offset += n_bytes
            b = np.frombuffer(raw[offset:offset + 8 * n_out], dtype="<f8")
            offset += 8 * n_out
            params.append((w.reshape(n_in, n_out).copy(), b.copy()))
        return cls(
            config=config,
            params=params,
            input_scaling=ScalingSpec.from_dict(header["input_scaling"]),
            target_names=tuple(header["target_names"]),
            target_mean=np.asarray(header["target_mean"], dtype=float),
            target_std=np.asarray(header["target_std"], dtype=float),
            dropped_targets=dict(header["dropped_targets"]),
            history=dict(header["history"]),
            meta=dict(header["meta"]),
        )


def _adam_state(params):
    return [(np.zeros_like(w), np.zeros_like(b)) for w, b in params], \
           [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]


def train(features: np.ndarray, targets: np.ndarray, config: MlpConfig,
          input_scaling: ScalingSpec, target_names: Sequence[str] = AERO_TARGETS,
          holdout: float = 0.1, meta: Optional[dict] = None) -> SurrogateModel:
    """Train a surrogate on physical-unit features/targets.

    Features are normalized with ``input_scaling``; regression targets are
    standardized from the training split (the stored model maps back to
    physical units). Near-constant regression targets (variance < 1e-12)
    are dropped from the head and remembered as constants. ``holdout`` is
    the test fraction of the seed-controlled split; per-epoch train/test
    losses land in the model history.
    """
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets)
    if features.ndim != 2 or features.shape[0] < 1:
        raise InvalidInputError("empty feature matrix")
    if features.shape[0] != targets.shape[0]:
        raise InvalidInputError("feature/target row mismatch")

    rng = np.random.default_rng(config.seed)
    n = features.shape[0]
    perm = rng.permutation(n)
    n_test = int(round(holdout * n))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    if train_idx.size == 0:
        raise InvalidInputError("holdout leaves no training rows")

    z = input_scaling.normalize(features)
    dropped = {}
    if config.head == "regression":
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        names = list(target_names)
        if targets.shape[1] != len(names):
            raise InvalidInputError("target_names must match target columns")
        variances = targets[train_idx].var(axis=0)
        keep = [j for j in range(targets.shape[1]) if variances[j] >= 1e-12]
        dropped = {names[j]: float(targets[train_idx, j].mean())
                   for j in range(targets.shape[1]) if j not in keep}
        names = [names[j] for j in keep]
        targets = targets[:, keep]
        if targets.shape[1] != config.n_outputs:
            config = MlpConfig(**{**asdict(config), "n_outputs": targets.shape[1]})
        mean = targets[train_idx].mean(axis=0)
        std = targets[train_idx].std(axis=0)
        std[std < 1e-30] = 1.0
        y = (targets - mean) / std
    else:
        names = list(target_names)
        y = np.asarray(targets, dtype=int)
        if y.ndim != 2 or y.shape[1] != config.n_groups:
            raise InvalidInputError(f"classification targets must be (n, {config.n_groups})")
        mean = np.zeros(0)
        std = np.zeros(0)

    params = init_params(config)
    m_state, v_state = _adam_state(params)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    history = {"train_loss": [], "test_loss": []}

    for epoch in range(config.epochs):
        if config.lr_schedule == "cosine":
            lr = config.learning_rate * max(
                0.5 * (1.0 + np.cos(np.pi * epoch / config.epochs)), 0.01)
        else:
            lr = config.learning_rate
        order = rng.permutation(train_idx.size)
        for lo in range(0, order.size, config.batch_size):
            batch = train_idx[order[lo:lo + config.batch_size]]
            batch_loss, grads = gradient(params, z[batch], y[batch], config)
            if not np.isfinite(batch_loss):
                raise TrainingDivergedError(
                    f"loss became non-finite at epoch {epoch}", epoch=epoch)
            step += 1
            new_params = []
            for i, ((w, b), (gw, gb)) in enumerate(zip(params, grads)):
                if config.optimizer == "adam":
                    mw, mb = m_state[i]
                    vw, vb = v_state[i]
                    mw = beta1 * mw + (1 - beta1) * gw
                    mb = beta1 * mb + (1 - beta1) * gb
                    vw = beta2 * vw + (1 - beta2) * gw * gw
                    vb = beta2 * vb + (1 - beta2) * gb * gb
                    m_state[i] = (mw, mb)
                    v_state[i] = (vw, vb)
                    c1 = 1 - beta1**step
                    c2 = 1 - beta2**step
                    w = w - lr * (mw / c1) / (np.sqrt(vw / c2) + eps)
                    b = b - lr * (mb / c1) / (np.sqrt(vb / c2) + eps)
                else:
                    w = w - lr * gw
                    b = b - lr * gb
                new_params.append((w, b))
            params = new_params
        train_loss = loss(params, z[train_idx], y[train_idx], config)
        if not np.isfinite(train_loss):
            raise TrainingDivergedError(f"loss became non-finite at epoch {epoch}", epoch=epoch)
        history["train_loss"].append(train_loss)
        if test_idx.size:
            history["test_loss"].append(loss(params, z[test_idx], y[test_idx], config))

    return SurrogateModel(
        config=config,
        params=params,
        input_scaling=input_scaling,
        target_names=tuple(names),
        target_mean=mean,
        target_std=std,
        dropped_targets=dropped,
        history=history,
        meta=dict(meta or {}),
    )
