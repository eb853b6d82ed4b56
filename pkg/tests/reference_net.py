"""Independent numpy re-implementation of the network forward pass.

Used as the oracle side of gradient and forward checks: no torch, just
padding, shifted products, and explicit activation functions.  Must mirror
the production padding convention (even kernels pad heavier on left/top).
"""

import numpy as np


def conv2d_ref(x, weight, bias):
    """Cross-correlation with same-padding; x is (H, W, Cin) float64."""
    kh, kw = weight.shape[2], weight.shape[3]
    top = kh // 2
    left = kw // 2
    padded = np.pad(x, ((top, kh - 1 - top), (left, kw - 1 - left), (0, 0)))
    height, width, _ = x.shape
    out = np.tile(np.asarray(bias, dtype=np.float64), (height, width, 1))
    for dh in range(kh):
        for dw in range(kw):
            out = out + padded[dh : dh + height, dw : dw + width, :] @ weight[:, :, dh, dw].T
    return out


def base_forward_ref(x, config, params):
    """Forward of one base network from a ModelWeights slice (numpy only)."""
    def relu(a):
        return np.maximum(a, 0.0)

    stacks = []
    for k in config.kernel_sizes:
        h = x
        for i in range(config.branch_depth):
            h = relu(conv2d_ref(h, params[f"deep{k}.{i}.weight"], params[f"deep{k}.{i}.bias"]))
        stacks.append(h)
    merged = np.concatenate(stacks, axis=2)
    mixed = np.concatenate(
        [relu(conv2d_ref(merged, params[f"mix{k}.weight"], params[f"mix{k}.bias"])) for k in config.kernel_sizes],
        axis=2,
    )
    out = conv2d_ref(mixed, params["head.weight"], params["head.bias"])
    if config.output_activation == "relu":
        out = relu(out)
    elif config.output_activation == "sigmoid":
        eps = np.finfo(np.float64).eps
        out = np.clip(1.0 / (1.0 + np.exp(-out)), eps, 1.0 - eps)
    return out


def pipeline_loss_ref(cover, secret, weights, loss_weights):
    """Scalar joint loss of the full pipeline, in model representation.

    Mirrors StegoModel.run_forward: the secret enters scaled by the
    representation gain and the revealed tensor keeps that gain.
    """
    gained = secret * weights.secret_gain
    features = base_forward_ref(gained, weights.configs["prepare"], weights.slice("prepare"))
    container = base_forward_ref(
        np.concatenate([cover, features], axis=2), weights.configs["hide"], weights.slice("hide")
    )
    revealed = base_forward_ref(container, weights.configs["reveal"], weights.slice("reveal"))
    w_image, w_audio = loss_weights.normalized()
    return (
        w_image * np.mean((container - cover) ** 2)
        + w_audio * np.mean((revealed - gained) ** 2),
        container,
        revealed,
    )
