"""Fast finite-difference oracle for the full-parameter gradient sweep.

Same mathematics as reference_net (padding, cross-correlation, ReLU,
logistic) but with gather indices precomputed per layer shape and with
stage caching: perturbing a hide-network parameter reuses the unperturbed
prepare features, perturbing a reveal parameter reuses the container.
Stays numpy-only so the oracle shares nothing with the torch path.
"""

import numpy as np


def kink_free_fixture(feature_maps: int = 4, side: int = 8):
    """Weights and inputs placed deep inside one ReLU linear region.

    Central differences only measure the true derivative away from the
    activation kinks, so the check point uses positive weights in
    [0.1, 1]/fan_in, +0.1 biases, and positive inputs: every preactivation
    is at least 0.1 while a 1e-3 single-parameter perturbation moves any
    preactivation by well under that margin.
    """
    from audiostego import init_weights

    weights = init_weights("stft", feature_maps=feature_maps, seed=0, secret_gain=1.0)
    rng = np.random.default_rng(99)
    for name, arr in weights.tensors.items():
        if name.endswith(".bias"):
            weights.tensors[name] = np.full(arr.shape, 0.1, dtype=np.float32)
        else:
            fan_in = arr.shape[1] * arr.shape[2] * arr.shape[3]
            weights.tensors[name] = (rng.uniform(0.1, 1.0, arr.shape) / fan_in).astype(np.float32)
    data_rng = np.random.default_rng(7)
    cover = data_rng.random((side, side, 3))
    secret = data_rng.random((side, side, 2)) * 0.8 + 0.1
    return weights, cover, secret


class _ConvPlan:
    """Precomputed im2col gather for one (H, W, Cin, k) combination."""

    def __init__(self, height, width, cin, k):
        top = k // 2
        left = k // 2
        ph, pw = height + k - 1, width + k - 1
        grid = np.arange(ph * pw * cin).reshape(ph, pw, cin)
        rows = []
        for h in range(height):
            for w in range(width):
                rows.append(grid[h : h + k, w : w + k, :].reshape(-1))
        self.take = np.array(rows)  # (H*W, k*k*cin)
        self.pad = ((top, k - 1 - top), (left, k - 1 - left), (0, 0))
        self.shape = (height, width)

    def run(self, x, weight, bias):
        padded = np.pad(x, self.pad)
        cols = padded.reshape(-1)[self.take]
        # weight (Cout, Cin, k, k) -> (k*k*Cin, Cout) matching gather order
        w2 = weight.transpose(2, 3, 1, 0).reshape(self.take.shape[1], -1)
        out = cols @ w2 + bias
        return out.reshape(self.shape[0], self.shape[1], -1)


class PipelineOracle:
    """Evaluates the joint loss of the three-network pipeline in numpy."""

    def __init__(self, weights, cover, secret, loss_weights, height=8, width=8):
        self.configs = weights.configs
        self.secret_gain = weights.secret_gain
        self.cover = cover
        self.gained = secret * weights.secret_gain
        self.w_image, self.w_audio = loss_weights.normalized()
        self.plans = {}
        for role in ("prepare", "hide", "reveal"):
            config = self.configs[role]
            f = config.feature_maps
            for k in config.kernel_sizes:
                self.plans.setdefault((config.input_channels, k), _ConvPlan(height, width, config.input_channels, k))
                self.plans.setdefault((f, k), _ConvPlan(height, width, f, k))
                self.plans.setdefault((3 * f, k), _ConvPlan(height, width, 3 * f, k))
            self.plans.setdefault((3 * f, config.final_kernel), _ConvPlan(height, width, 3 * f, config.final_kernel))

    def _net(self, role, params, x):
        config = self.configs[role]
        stacks = []
        for k in config.kernel_sizes:
            h = x
            for i in range(config.branch_depth):
                plan = self.plans[(h.shape[2], k)]
                h = np.maximum(plan.run(h, params[f"deep{k}.{i}.weight"], params[f"deep{k}.{i}.bias"]), 0.0)
            stacks.append(h)
        merged = np.concatenate(stacks, axis=2)
        mixed = np.concatenate(
            [
                np.maximum(
                    self.plans[(merged.shape[2], k)].run(merged, params[f"mix{k}.weight"], params[f"mix{k}.bias"]),
                    0.0,
                )
                for k in config.kernel_sizes
            ],
            axis=2,
        )
        out = self.plans[(mixed.shape[2], config.final_kernel)].run(mixed, params["head.weight"], params["head.bias"])
        if config.output_activation == "relu":
            out = np.maximum(out, 0.0)
        elif config.output_activation == "sigmoid":
            eps = np.finfo(np.float64).eps
            out = np.clip(1.0 / (1.0 + np.exp(-out)), eps, 1.0 - eps)
        return out

    def loss_from(self, stage, params, features=None, container=None):
        """Loss, recomputing only from the given stage onward."""
        if stage == "prepare":
            features = self._net("prepare", params["prepare"], self.gained)
            stage = "hide"
        if stage == "hide":
            container = self._net("hide", params["hide"], np.concatenate([self.cover, features], axis=2))
        revealed = self._net("reveal", params["reveal"], container)
        return (
            self.w_image * np.mean((container - self.cover) ** 2)
            + self.w_audio * np.mean((revealed - self.gained) ** 2),
            features,
            container,
        )


def sweep_all_parameters(weights, cover, secret, loss_weights, grads, step=1e-3, rel_tol=1e-4, abs_floor=1e-10):
    """Central-difference check of every parameter; returns failure list."""
    oracle = PipelineOracle(weights, cover, secret, loss_weights)
    params = {
        role: {k: v.astype(np.float64).copy() for k, v in weights.slice(role).items()}
        for role in ("prepare", "hide", "reveal")
    }
    _, features0, container0 = oracle.loss_from("prepare", params)
    failures = []
    checked = 0
    for role in ("prepare", "hide", "reveal"):
        for name, tensor in params[role].items():
            flat = tensor.reshape(-1)
            grad_flat = grads[f"{role}.{name}"].reshape(-1)
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + step
                plus, _, _ = oracle.loss_from(role, params, features=features0, container=container0)
                flat[i] = original - step
                minus, _, _ = oracle.loss_from(role, params, features=features0, container=container0)
                flat[i] = original
                fd = (plus - minus) / (2.0 * step)
                ad = grad_flat[i]
                checked += 1
                if abs(ad - fd) > rel_tol * max(abs(ad), abs(fd)) + abs_floor:
                    failures.append((f"{role}.{name}", i, ad, fd))
    return checked, failures
