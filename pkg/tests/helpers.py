"""Shared test oracles, independent of the implementation paths they check."""

from __future__ import annotations

import numpy as np

from phishnet.model import (
    EncodedBatch,
    ModelConfig,
    ModelParams,
    bce_loss,
    forward,
    init_params,
)


def trainable_mask(params: ModelParams, name: str) -> np.ndarray:
    """True where an entry is a free parameter (frozen rows excluded)."""
    arr = params.tensors[name]
    mask = np.ones(arr.shape, dtype=bool)
    if params.is_frozen(name):
        mask[:] = False
    elif name.endswith(".embed"):
        mask[0, :] = False  # padding row is pinned at zero
    return mask


def finite_diff_grads(
    params: ModelParams,
    config: ModelConfig,
    batch: EncodedBatch,
    labels: np.ndarray,
    eps: float = 1e-7,
    step: float = 1e-5,
) -> dict[str, np.ndarray]:
    """Central finite differences of the clamped-BCE objective, coordinate by
    coordinate. Independent of the analytic backward pass: only the forward
    pass and the loss formula are reused."""

    def loss_now() -> float:
        return bce_loss(forward(params, config, batch), labels, eps=eps)

    out: dict[str, np.ndarray] = {}
    for name, arr in params.tensors.items():
        grad = np.zeros_like(arr)
        mask = trainable_mask(params, name)
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        mflat = mask.reshape(-1)
        for i in range(flat.size):
            if not mflat[i]:
                continue
            original = flat[i]
            flat[i] = original + step
            up = loss_now()
            flat[i] = original - step
            down = loss_now()
            flat[i] = original
            gflat[i] = (up - down) / (2.0 * step)
        out[name] = grad
    return out


def max_relative_error(
    analytic: dict[str, np.ndarray],
    numeric: dict[str, np.ndarray],
    masks: dict[str, np.ndarray],
    floor: float = 1e-5,
) -> float:
    worst = 0.0
    for name, a in analytic.items():
        f = numeric[name]
        m = masks[name]
        if not m.any():
            continue
        denom = np.maximum(np.maximum(np.abs(a[m]), np.abs(f[m])), floor)
        worst = max(worst, float(np.max(np.abs(a[m] - f[m]) / denom)))
    return worst


def random_micro_setup(seed: int):
    """A tiny randomized model + batch in float64, sized for finite differences."""
    rng = np.random.default_rng(seed)
    variant = rng.choice(["full", "url_only", "html_only"])
    kernel_width = int(rng.integers(2, 4))
    conv_layers = int(rng.integers(1, 3))
    min_len = conv_layers * (kernel_width - 1) + 1
    url_len = int(rng.integers(min_len, 13))
    html_len = int(rng.integers(min_len, 13))
    fc_depth = int(rng.integers(1, 3))
    config = ModelConfig(
        embed_dim=int(rng.integers(2, 4)),
        url_len=url_len,
        html_len=html_len,
        kernel_width=kernel_width,
        conv_filters=int(rng.integers(1, 5)),
        conv_layers=conv_layers,
        fc_units=tuple(int(rng.integers(2, 5)) for _ in range(fc_depth)),
        variant=str(variant),
        use_embedding=bool(rng.integers(0, 2)),
    )
    url_vocab = int(rng.integers(4, 9))
    html_vocab = int(rng.integers(4, 9))
    params = init_params(config, url_vocab, html_vocab, seed=int(rng.integers(2**31)), dtype=np.float64)
    # random nonzero weights everywhere (init gives zero biases; perturb them)
    for name, arr in params.tensors.items():
        if params.is_frozen(name):
            continue
        arr += rng.normal(0.0, 0.3, size=arr.shape)
        if name.endswith(".embed"):
            arr[0, :] = 0.0
    batch_size = int(rng.integers(2, 4))
    batch = EncodedBatch(
        url_ids=rng.integers(0, url_vocab, size=(batch_size, url_len)),
        html_ids=rng.integers(0, html_vocab, size=(batch_size, html_len)),
    )
    labels = rng.integers(0, 2, size=batch_size).astype(np.float64)
    return params, config, batch, labels


def mann_whitney_auc(scores, labels) -> float:
    """Pairwise AUC oracle: fraction of (positive, negative) pairs ranked
    correctly, ties counted half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need both classes")
    wins = 0.0
    for s in pos:
        wins += np.sum(s > neg) + 0.5 * np.sum(s == neg)
    return float(wins / (pos.size * neg.size))
