"""Train the committed two-class 8x8 classifier fixture.

The task is synthetic and fully deterministic: inputs are uniform in
[0,1]^64 and the label says whether the squared distance to a slightly
wobbled center exceeds the population median, i.e. the true boundary is a
curved (ellipsoidal) surface with roughly balanced classes. A two-hidden-
layer ReLU network (64 units each) is trained with plain full-batch Adam
and written to tests/fixtures/mlp_8x8_2class.txt in the package's weights
format. Re-running this script reproduces the file bit for bit.
"""
import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from lhsattack.oracles import MlpLayer, MlpModel, load_mlp, mlp_forward, save_mlp

DIM = 64
HIDDEN = 64
SEED = 20240

DEFAULT_OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures",
                           "mlp_8x8_2class.txt")


def make_dataset(rng, n):
    x = rng.random((n, DIM))
    center = 0.5 + 0.08 * rng.standard_normal(DIM)
    score = ((x - center) ** 2).sum(axis=1)
    y = (score > np.median(score)).astype(int)
    return x, y


def train(x, y, rng, iters=3000, lr=3e-3):
    n = x.shape[0]
    w1 = rng.standard_normal((HIDDEN, DIM)) * np.sqrt(2.0 / DIM)
    b1 = np.zeros(HIDDEN)
    w2 = rng.standard_normal((HIDDEN, HIDDEN)) * np.sqrt(2.0 / HIDDEN)
    b2 = np.zeros(HIDDEN)
    w3 = rng.standard_normal((2, HIDDEN)) * np.sqrt(2.0 / HIDDEN)
    b3 = np.zeros(2)
    params = [w1, b1, w2, b2, w3, b3]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    onehot = np.eye(2)[y]

    for it in range(1, iters + 1):
        h1 = np.maximum(x @ w1.T + b1, 0.0)
        h2 = np.maximum(h1 @ w2.T + b2, 0.0)
        logits = h2 @ w3.T + b3
        z = logits - logits.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)

        d_logits = (p - onehot) / n
        g_w3 = d_logits.T @ h2
        g_b3 = d_logits.sum(axis=0)
        d_h2 = (d_logits @ w3) * (h2 > 0)
        g_w2 = d_h2.T @ h1
        g_b2 = d_h2.sum(axis=0)
        d_h1 = (d_h2 @ w2) * (h1 > 0)
        g_w1 = d_h1.T @ x
        g_b1 = d_h1.sum(axis=0)

        grads = [g_w1, g_b1, g_w2, g_b2, g_w3, g_b3]
        for i, (prm, grd) in enumerate(zip(params, grads)):
            m[i] = beta1 * m[i] + (1 - beta1) * grd
            v[i] = beta2 * v[i] + (1 - beta2) * grd * grd
            mhat = m[i] / (1 - beta1 ** it)
            vhat = v[i] / (1 - beta2 ** it)
            prm -= lr * mhat / (np.sqrt(vhat) + eps)

        if it % 500 == 0:
            acc = (logits.argmax(axis=1) == y).mean()
            loss = -np.log(p[np.arange(n), y] + 1e-12).mean()
            print(f"iter {it:5d}  loss {loss:.4f}  train acc {acc:.4f}")
    return params


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=DEFAULT_OUT)
    args = ap.parse_args()

    rng = np.random.default_rng(SEED)
    x, y = make_dataset(rng, 4000)
    w1, b1, w2, b2, w3, b3 = train(x, y, rng)

    model = MlpModel(
        layers=[MlpLayer(w1, b1, "relu"),
                MlpLayer(w2, b2, "relu"),
                MlpLayer(w3, b3, "identity")],
        class_count=2)

    xv, yv = make_dataset(np.random.default_rng(SEED + 1), 2000)
    pred = np.array([int(np.argmax(mlp_forward(model, row))) for row in xv])
    balance = pred.mean()
    # Labels came from a fresh center draw, so this is a rough check only.
    print(f"holdout class-1 fraction {balance:.3f}")

    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    save_mlp(model, args.out)
    reloaded = load_mlp(args.out)
    same = all(
        np.array_equal(a.weight, b.weight) and np.array_equal(a.bias, b.bias)
        for a, b in zip(model.layers, reloaded.layers))
    print(f"saved {args.out} (round-trip exact: {same})")


if __name__ == "__main__":
    main()
