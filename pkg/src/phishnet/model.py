"""Dual-branch character CNN: embedding -> 1-D convolution -> global max
pool -> concatenation -> fully connected layers -> sigmoid, with analytic
backpropagation.

Parameters live in a flat name -> ndarray mapping with a fixed name order,
which keeps the optimizer, gradient checking and checkpointing uniform.
Row 0 of each embedding matrix is the padding row; it is zero at
initialization, receives no gradient, and is re-zeroed after every
optimizer step, so trailing padding can never influence a prediction.

With ``use_embedding`` off the embedding matrices are frozen one-hot
indicator rows (padding row all zero): characters enter the convolution by
identity instead of a learned dense projection, and only the conv/FC stack
trains.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .corpus import Label, WebPageSample
from .errors import DataError
from .tokenizer import CharVocabulary, EncoderConfig, encode

VARIANTS = ("full", "url_only", "html_only")

DEFAULT_LOSS_EPS = 1e-7


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 16
    url_len: int = 180
    html_len: int = 2000
    kernel_width: int = 8
    conv_filters: int = 16
    conv_layers: int = 1
    fc_units: tuple[int, ...] = (32, 16)
    variant: str = "full"
    use_embedding: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DataError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        for name in ("embed_dim", "url_len", "html_len", "kernel_width", "conv_filters"):
            if getattr(self, name) <= 0:
                raise DataError(f"{name} must be positive")
        if not 1 <= self.conv_layers <= 3:
            raise DataError("conv_layers must be between 1 and 3")
        if not 1 <= len(self.fc_units) <= 3 or any(u <= 0 for u in self.fc_units):
            raise DataError("fc_units must be 1 to 3 positive layer widths")
        for branch in self.branches:
            if self.branch_len(branch) - self.conv_layers * (self.kernel_width - 1) < 1:
                raise DataError(
                    f"{branch} sequence length {self.branch_len(branch)} too short for "
                    f"{self.conv_layers} conv layer(s) of width {self.kernel_width}"
                )

    @property
    def branches(self) -> tuple[str, ...]:
        if self.variant == "url_only":
            return ("url",)
        if self.variant == "html_only":
            return ("html",)
        return ("url", "html")

    def branch_len(self, branch: str) -> int:
        return self.url_len if branch == "url" else self.html_len

    @property
    def concat_dim(self) -> int:
        return self.conv_filters * len(self.branches)


@dataclass
class ModelParams:
    """Named trainable tensors in a fixed iteration order."""

    tensors: dict[str, np.ndarray]
    use_embedding: bool = True

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.tensors.values())).dtype

    def names(self) -> list[str]:
        return list(self.tensors)

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.tensors.items()}, self.use_embedding)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def is_frozen(self, name: str) -> bool:
        """Whole-tensor freeze: indicator embeddings in no-embedding mode."""
        return name.endswith(".embed") and not self.use_embedding


@dataclass
class EncodedBatch:
    """Integer-encoded mini-batch; unused branch arrays may be None."""

    url_ids: np.ndarray | None = None
    html_ids: np.ndarray | None = None
    labels: np.ndarray | None = None

    def ids_for(self, branch: str) -> np.ndarray:
        ids = self.url_ids if branch == "url" else self.html_ids
        if ids is None:
            raise DataError(f"batch carries no {branch} ids")
        return ids

    @property
    def size(self) -> int:
        for ids in (self.url_ids, self.html_ids):
            if ids is not None:
                return ids.shape[0]
        raise DataError("empty batch")


def _glorot_bound(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_params(
    config: ModelConfig,
    url_vocab_size: int,
    html_vocab_size: int,
    seed: int,
    dtype=np.float32,
) -> ModelParams:
    """Seeded initialization: embeddings uniform(-0.05, 0.05), conv/FC
    weights scaled-uniform with bound sqrt(6/(fan_in+fan_out)), biases zero.
    Draw order is fixed (url branch, html branch, FC stack, output)."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    vocab_sizes = {"url": url_vocab_size, "html": html_vocab_size}
    for branch in config.branches:
        vsize = vocab_sizes[branch]
        if config.use_embedding:
            embed = rng.uniform(-0.05, 0.05, size=(vsize, config.embed_dim)).astype(dtype)
            embed[0, :] = 0.0
            in_channels = config.embed_dim
        else:
            embed = np.eye(vsize, dtype=dtype)
            embed[0, :] = 0.0
            in_channels = vsize
        tensors[f"{branch}.embed"] = embed
        for layer in range(config.conv_layers):
            c_in = in_channels if layer == 0 else config.conv_filters
            bound = _glorot_bound(config.kernel_width * c_in, config.kernel_width * config.conv_filters)
            tensors[f"{branch}.conv{layer}.kernel"] = rng.uniform(
                -bound, bound, size=(config.conv_filters, config.kernel_width, c_in)
            ).astype(dtype)
            tensors[f"{branch}.conv{layer}.bias"] = np.zeros(config.conv_filters, dtype=dtype)
    in_dim = config.concat_dim
    for i, units in enumerate(config.fc_units):
        bound = _glorot_bound(in_dim, units)
        tensors[f"fc{i}.weight"] = rng.uniform(-bound, bound, size=(in_dim, units)).astype(dtype)
        tensors[f"fc{i}.bias"] = np.zeros(units, dtype=dtype)
        in_dim = units
    bound = _glorot_bound(in_dim, 1)
    tensors["out.weight"] = rng.uniform(-bound, bound, size=(in_dim,)).astype(dtype)
    tensors["out.bias"] = np.zeros(1, dtype=dtype)
    return ModelParams(tensors, use_embedding=config.use_embedding)


def _sigmoid(q: np.ndarray) -> np.ndarray:
    out = np.empty_like(q)
    pos = q >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-q[pos]))
    eq = np.exp(q[~pos])
    out[~pos] = eq / (1.0 + eq)
    return out


def _conv1d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid 1-D convolution over the time axis, stride 1.

    x: (B, T, C); kernel: (F, K, C); returns (B, T-K+1, F).
    """
    windows = sliding_window_view(x, kernel.shape[1], axis=1)  # (B, T_out, C, K)
    return np.tensordot(windows, kernel, axes=([3, 2], [1, 2])) + bias


def _check_shapes(params: ModelParams, config: ModelConfig, batch: EncodedBatch) -> None:
    for branch in config.branches:
        ids = batch.ids_for(branch)
        if ids.ndim != 2 or ids.shape[1] != config.branch_len(branch):
            raise DataError(
                f"{branch} ids shaped {ids.shape}, expected (B, {config.branch_len(branch)})"
            )
        embed = params.tensors.get(f"{branch}.embed")
        if embed is None:
            raise DataError(f"params carry no {branch} branch but config requires it")
        if int(ids.max(initial=0)) >= embed.shape[0]:
            raise DataError(f"{branch} ids exceed the embedding table ({embed.shape[0]} rows)")
    if params.tensors["fc0.weight"].shape[0] != config.concat_dim:
        raise DataError(
            f"fc0 expects {params.tensors['fc0.weight'].shape[0]} inputs, "
            f"config concatenation is {config.concat_dim}-dimensional"
        )


def _forward_cached(params: ModelParams, config: ModelConfig, batch: EncodedBatch):
    _check_shapes(params, config, batch)
    t = params.tensors
    cache: dict = {"branches": {}}
    pooled_parts = []
    for branch in config.branches:
        ids = batch.ids_for(branch)
        a = t[f"{branch}.embed"][ids]  # (B, L, C)
        inputs, pre_acts = [], []
        for layer in range(config.conv_layers):
            inputs.append(a)
            z = _conv1d(a, t[f"{branch}.conv{layer}.kernel"], t[f"{branch}.conv{layer}.bias"])
            pre_acts.append(z)
            a = np.maximum(z, 0.0)
        argmax_t = np.argmax(a, axis=1)  # first maximum wins ties
        pooled = np.take_along_axis(a, argmax_t[:, None, :], axis=1)[:, 0, :]
        cache["branches"][branch] = {
            "ids": ids,
            "inputs": inputs,
            "pre_acts": pre_acts,
            "argmax_t": argmax_t,
        }
        pooled_parts.append(pooled)
    h = np.concatenate(pooled_parts, axis=1)
    cache["concat"] = h
    fc_inputs, fc_pre = [], []
    for i in range(len(config.fc_units)):
        fc_inputs.append(h)
        z = h @ t[f"fc{i}.weight"] + t[f"fc{i}.bias"]
        fc_pre.append(z)
        h = np.maximum(z, 0.0)
    cache["fc_inputs"] = fc_inputs
    cache["fc_pre"] = fc_pre
    cache["last_hidden"] = h
    q = h @ t["out.weight"] + t["out.bias"][0]
    p = _sigmoid(q)
    cache["p"] = p
    return p, cache


def forward(params: ModelParams, config: ModelConfig, batch: EncodedBatch) -> np.ndarray:
    """Probability of the phishing class, one value per batch row."""
    p, _ = _forward_cached(params, config, batch)
    return p


def bce_loss(probabilities: np.ndarray, labels: np.ndarray, eps: float = DEFAULT_LOSS_EPS) -> float:
    """Mean binary cross-entropy with probabilities clamped to [eps, 1-eps]."""
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.size == 0:
        raise DataError("empty batch has no loss")
    if p.shape != y.shape:
        raise DataError(f"probabilities {p.shape} and labels {y.shape} differ in length")
    pc = np.clip(p, eps, 1.0 - eps)
    return float(-np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc)))


def zeros_like_params(params: ModelParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.tensors.items()}


def loss_and_grads(
    params: ModelParams,
    config: ModelConfig,
    batch: EncodedBatch,
    labels: np.ndarray,
    eps: float = DEFAULT_LOSS_EPS,
    sample_weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray, dict[str, np.ndarray]]:
    """Forward pass, mean BCE and analytic gradients for every parameter.

    Max-pool gradient is routed to each filter's first maximal time step;
    the padding embedding row and frozen indicator embeddings get zero
    gradient. `sample_weights`, when given, rescales each row's loss term
    (weights are normalized to mean 1 so the scale of the loss is stable).
    """
    p, cache = _forward_cached(params, config, batch)
    t = params.tensors
    dtype = params.dtype
    y = np.asarray(labels, dtype=dtype)
    if y.shape != p.shape:
        raise DataError(f"labels {y.shape} do not match batch of {p.shape[0]}")
    n = p.shape[0]

    if sample_weights is None:
        w = np.ones(n, dtype=dtype)
    else:
        w = np.asarray(sample_weights, dtype=dtype)
        w = w * (n / w.sum())
    pc = np.clip(p, eps, 1.0 - eps)
    loss = float(-np.mean(w * (y * np.log(pc.astype(np.float64)) + (1.0 - y) * np.log1p(-pc.astype(np.float64)))))

    inside = (p >= eps) & (p <= 1.0 - eps)
    dpc = (-(y / pc) + (1.0 - y) / (1.0 - pc)) * w / n
    dq = (dpc * inside * p * (1.0 - p)).astype(dtype)

    grads = zeros_like_params(params)
    h_last = cache["last_hidden"]
    grads["out.weight"] = h_last.T @ dq
    grads["out.bias"] = np.array([dq.sum()], dtype=dtype)
    dh = np.outer(dq, t["out.weight"])

    for i in reversed(range(len(config.fc_units))):
        dz = dh * (cache["fc_pre"][i] > 0)
        grads[f"fc{i}.weight"] = cache["fc_inputs"][i].T @ dz
        grads[f"fc{i}.bias"] = dz.sum(axis=0)
        dh = dz @ t[f"fc{i}.weight"].T

    offset = 0
    for branch in config.branches:
        bc = cache["branches"][branch]
        dpooled = dh[:, offset:offset + config.conv_filters]
        offset += config.conv_filters
        da = np.zeros(bc["pre_acts"][-1].shape, dtype=dtype)
        np.put_along_axis(da, bc["argmax_t"][:, None, :], dpooled[:, None, :], axis=1)
        for layer in reversed(range(config.conv_layers)):
            z = bc["pre_acts"][layer]
            x_in = bc["inputs"][layer]
            kernel = t[f"{branch}.conv{layer}.kernel"]
            k_width = kernel.shape[1]
            dz = da * (z > 0)
            windows = sliding_window_view(x_in, k_width, axis=1)  # (B, T_out, C, K)
            dkernel = np.tensordot(dz, windows, axes=([0, 1], [0, 1]))  # (F, C, K)
            grads[f"{branch}.conv{layer}.kernel"] = np.ascontiguousarray(dkernel.transpose(0, 2, 1))
            grads[f"{branch}.conv{layer}.bias"] = dz.sum(axis=(0, 1))
            t_out = dz.shape[1]
            da_prev = np.zeros_like(x_in)
            for k in range(k_width):
                da_prev[:, k:k + t_out, :] += dz @ kernel[:, k, :]
            da = da_prev
        name = f"{branch}.embed"
        if not params.is_frozen(name):
            d_embed = grads[name]
            np.add.at(d_embed, bc["ids"].reshape(-1), da.reshape(-1, da.shape[-1]))
            d_embed[0, :] = 0.0  # padding row stays frozen
    return loss, p, grads


def backward(
    params: ModelParams,
    config: ModelConfig,
    batch: EncodedBatch,
    labels: np.ndarray,
    eps: float = DEFAULT_LOSS_EPS,
) -> dict[str, np.ndarray]:
    """Gradient set mirroring the parameters (see loss_and_grads)."""
    _, _, grads = loss_and_grads(params, config, batch, labels, eps=eps)
    return grads


def encode_sample(
    sample: WebPageSample,
    url_vocab: CharVocabulary,
    html_vocab: CharVocabulary,
    enc: EncoderConfig,
) -> tuple[np.ndarray, np.ndarray]:
    return (
        encode(sample.normalized_url, url_vocab, enc.url_len),
        encode(sample.html, html_vocab, enc.html_len),
    )


def encode_samples(
    samples: Iterable[WebPageSample],
    url_vocab: CharVocabulary,
    html_vocab: CharVocabulary,
    enc: EncoderConfig,
) -> EncodedBatch:
    url_rows, html_rows, labels = [], [], []
    for s in samples:
        u, h = encode_sample(s, url_vocab, html_vocab, enc)
        url_rows.append(u)
        html_rows.append(h)
        labels.append(int(s.label))
    if not url_rows:
        raise DataError("no samples to encode")
    return EncodedBatch(
        url_ids=np.stack(url_rows),
        html_ids=np.stack(html_rows),
        labels=np.asarray(labels, dtype=np.float64),
    )


def predict(
    params: ModelParams,
    config: ModelConfig,
    sample: WebPageSample,
    url_vocab: CharVocabulary,
    html_vocab: CharVocabulary,
    threshold: float = 0.5,
) -> tuple[Label, float]:
    """Encode, forward, and label phishing iff score strictly exceeds threshold."""
    enc = EncoderConfig(url_len=config.url_len, html_len=config.html_len)
    u, h = encode_sample(sample, url_vocab, html_vocab, enc)
    batch = EncodedBatch(url_ids=u[None, :], html_ids=h[None, :])
    score = float(forward(params, config, batch)[0])
    label = Label.PHISHING if score > threshold else Label.LEGITIMATE
    return label, score


def concat_features(params: ModelParams, config: ModelConfig, batch: EncodedBatch) -> np.ndarray:
    """Concatenation-layer activations (post-pool, pre-FC) for a batch."""
    if config.variant != "full":
        raise DataError("concatenation features require the full variant")
    _, cache = _forward_cached(params, config, batch)
    return cache["concat"]


def extract_concat_features(
    params: ModelParams,
    config: ModelConfig,
    sample: WebPageSample,
    url_vocab: CharVocabulary,
    html_vocab: CharVocabulary,
) -> np.ndarray:
    enc = EncoderConfig(url_len=config.url_len, html_len=config.html_len)
    u, h = encode_sample(sample, url_vocab, html_vocab, enc)
    batch = EncodedBatch(url_ids=u[None, :], html_ids=h[None, :])
    return concat_features(params, config, batch)[0]
