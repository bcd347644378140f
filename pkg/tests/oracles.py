"""Independent reference implementations used by the test-suite."""

from __future__ import annotations

import numpy as np

from tempocast.autodiff import tensor as ops
from tempocast.autodiff.tensor import Tensor
from tempocast.losses import mse_loss, quantile_loss

FD_STEP = 1e-5


def numeric_grad(f, arrays, i, step=FD_STEP):
    """Central finite differences of scalar ``f(*arrays)`` w.r.t. ``arrays[i]``."""
    x = arrays[i]
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + step
        up = f(*arrays)
        x[idx] = orig - step
        down = f(*arrays)
        x[idx] = orig
        grad[idx] = (up - down) / (2 * step)
    return grad


def rel_error(analytic, numeric, floor=1e-6, tensor_floor=1e-4):
    """Largest elementwise |a - n| / max(|a|, |n|, floor).

    The floor also scales with the largest entry of the tensor: an entry
    10^4 times smaller than its neighbours is judged against that scale,
    since round-off in the difference quotient swamps it otherwise.
    """
    a, n = np.asarray(analytic), np.asarray(numeric)
    if a.size:
        floor = max(floor, tensor_floor * float(np.max(np.abs(n))))
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / scale)) if a.size else 0.0


def check_op_grads(build, arrays, tol=1e-4, step=FD_STEP):
    """Compare autodiff grads of ``sum(w * build(*tensors))`` against finite differences.

    A fixed random weighting ``w`` keeps the reduction from hiding errors that
    cancel under a plain sum. Returns the worst relative error.
    """
    rng = np.random.default_rng(1234)
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    probe = build(*[Tensor(a) for a in arrays]).data
    w = rng.normal(size=probe.shape)

    def scalar(*xs):
        return float(np.sum(w * build(*[Tensor(x) for x in xs]).data))

    leaves = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = build(*leaves)
    (out * Tensor(w)).sum().backward()
    worst = 0.0
    for i, leaf in enumerate(leaves):
        worst = max(worst, rel_error(leaf.grad, numeric_grad(scalar, arrays, i, step)))
    return worst


def check_model_grads(params, loss_fn, rng, max_entries=6, step=FD_STEP):
    """Spot-check ``max_entries`` randomly chosen coordinates of every parameter.

    ``loss_fn()`` must rebuild the graph from the parameters' current data.
    Returns the worst relative error over all probes, with an absolute floor
    so near-zero gradients do not dominate.
    """
    for p in params:
        p.zero_grad()
    loss_fn().backward()
    analytic = {id(p): p.grad.copy() for p in params}
    worst = 0.0
    for p in params:
        flat = p.data.reshape(-1)
        picks = rng.choice(flat.size, size=min(max_entries, flat.size), replace=False)
        for j in picks:
            orig = flat[j]
            flat[j] = orig + step
            up = loss_fn().item()
            flat[j] = orig - step
            down = loss_fn().item()
            flat[j] = orig
            num = (up - down) / (2 * step)
            ana = analytic[id(p)].reshape(-1)[j]
            worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), 1e-4))
    return worst


def check_directional_grads(params, loss_fn, rng, step=FD_STEP):
    """One random-direction probe per parameter tensor.

    Compares ``<grad, v>`` against the central difference of the loss along a
    Gaussian direction ``v`` confined to that tensor. Cheaper than coordinate
    probes on wide models while still covering every entry.
    """
    for p in params:
        p.zero_grad()
    loss_fn().backward()
    worst = 0.0
    for p in params:
        v = rng.normal(size=p.shape)
        ana = float(np.sum(p.grad * v))
        orig = p.data.copy()
        p.data[...] = orig + step * v
        up = loss_fn().item()
        p.data[...] = orig - step * v
        down = loss_fn().item()
        p.data[...] = orig
        num = (up - down) / (2 * step)
        worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), 1e-4))
    return worst


def jitter(params, rng, scale=0.05):
    """Move parameters off their initial values (zero biases sit on ReLU kinks)."""
    for p in params:
        p.data += rng.normal(scale=scale, size=p.shape)


def away_from_zero(x, margin=0.05):
    return np.where(x >= 0, x + margin, x - margin)


# --------------------------------------------------------------- gradients
def primitive_cases(r):
    """(name, build, arrays) triples drawn from ``r``."""
    n = r.normal
    mask = r.random((3, 4)) < 0.3
    seq = [n(size=(2, 5, 12)), n(size=(2, 3)), n(size=(2, 3)), n(size=(3, 12))]
    qs = (0.1, 0.5, 0.9)
    target = n(size=(3, 4))
    return [
        ("matmul", ops.matmul, [n(size=(3, 4)), n(size=(4, 2))]),
        ("batched matmul", ops.matmul, [n(size=(2, 3, 4)), n(size=(4, 5))]),
        ("add", lambda a, b: ops.elementwise("add", a, b), [n(size=(2, 3, 4)), n(size=4)]),
        ("sub", lambda a, b: ops.elementwise("sub", b, a), [n(size=(2, 3, 4)), n(size=4)]),
        ("mul", lambda a, b: ops.elementwise("mul", a, b), [n(size=(2, 3, 4)), n(size=(3, 4))]),
        ("div", ops.div, [n(size=(3, 4)), away_from_zero(n(size=4), 0.5)]),
        ("power", lambda a: ops.power(a, 3.0), [n(size=(3, 4))]),
        ("sigmoid", ops.sigmoid, [3 * n(size=(3, 4))]),
        ("tanh", ops.tanh, [2 * n(size=(3, 4))]),
        ("elu", ops.elu, [away_from_zero(n(size=(3, 4)))]),
        ("relu", ops.relu, [away_from_zero(n(size=(3, 4)))]),
        ("exp", ops.exp, [n(size=(3, 4))]),
        ("log", ops.log, [r.uniform(0.5, 3.0, size=(3, 4))]),
        ("softmax", lambda a: ops.softmax(a, axis=-1), [2 * n(size=(2, 3, 5))]),
        ("layer_norm", ops.layer_norm, [n(size=(4, 6)), n(size=6), n(size=6)]),
        ("dropout", lambda a: ops.dropout(a, 0.3, True, np.random.default_rng(5)), [n(size=(3, 4))]),
        ("getitem", lambda a: a[:, 1:, ::2], [n(size=(2, 3, 4))]),
        ("fancy getitem", lambda a: a[..., [0, 0, 2]], [n(size=(2, 3, 4))]),
        ("transpose", lambda a: ops.transpose(a, (2, 0, 1)), [n(size=(2, 3, 4))]),
        ("swapaxes", lambda a: ops.swapaxes(a, 0, 2), [n(size=(2, 3, 4))]),
        ("reshape", lambda a: ops.reshape(a, (4, 6)), [n(size=(2, 3, 4))]),
        ("sum", lambda a: ops.tsum(a, axis=1), [n(size=(2, 3, 4))]),
        ("mean", lambda a: ops.mean(a, axis=(0, 2), keepdims=True), [n(size=(2, 3, 4))]),
        ("concat", lambda a, b: ops.concat([a, b], axis=1), [n(size=(2, 3)), n(size=(2, 5))]),
        ("stack", lambda a, b: ops.stack([a, b], axis=1), [n(size=(2, 3)), n(size=(2, 3))]),
        ("pad_left", lambda a: ops.pad_left(a, 3, axis=1), [n(size=(2, 3, 4))]),
        ("masked_fill", lambda a: ops.masked_fill(a, mask, -1e9) * 1e-9, [n(size=(3, 4))]),
        ("lstm_sequence", ops.lstm_sequence, seq),
        ("mse_loss", lambda a: mse_loss(a, target), [n(size=(3, 4))]),
        ("quantile_loss", lambda a: quantile_loss(a, target, qs), [n(size=(3, 4, 3))]),
    ]


# --------------------------------------------------------------- baselines
def brute_seasonal(train, K, horizon):
    train = list(train)
    out = []
    tail = train[len(train) - K :]
    for h in range(horizon):
        out.append(tail[h % K])
    return np.array(out, dtype=np.float64)


def brute_drift(train, horizon):
    first, last, T = float(train[0]), float(train[-1]), len(train)
    slope = (last - first) / (T - 1)
    return np.array([last + (h + 1) * slope for h in range(horizon)], dtype=np.float64)


def brute_combined(train, K, horizon):
    seasonal = brute_seasonal(train, K, horizon)
    slope = (float(train[-1]) - float(train[0])) / (len(train) - 1)
    return np.array([seasonal[h] + (h + 1) * slope for h in range(horizon)], dtype=np.float64)


def brute_mape(actual, predicted):
    total = 0.0
    for a, p in zip(actual, predicted):
        total += abs(a - p) / abs(a)
    return 100.0 * total / len(actual)


def brute_window_count(length, k, n):
    count = 0
    for t in range(length):
        if t - k + 1 >= 0 and t + n <= length - 1:
            count += 1
    return count


def least_squares_seasonal_mape(values, train_len):
    """MAPE of an OLS fit of trend + annual + weekly harmonics, trained on the first ``train_len`` points."""
    t = np.arange(len(values), dtype=np.float64)
    X = np.stack(
        [np.ones_like(t), t,
         np.sin(2 * np.pi * t / 365.25), np.cos(2 * np.pi * t / 365.25),
         np.sin(2 * np.pi * t / 7), np.cos(2 * np.pi * t / 7)],
        axis=1,
    )
    beta = np.linalg.lstsq(X[:train_len], values[:train_len], rcond=None)[0]
    pred = X[train_len:] @ beta
    return brute_mape(values[train_len:], pred)
