"""Train tiny dense classifiers on the bundled 8x8 digits data and export
them as committed fixture files.

Produces, under fixtures/out/:
  mnist1_model.json / mnist1_test.csv  - one softmax layer, 64 -> 10
  micro_model.json  / micro_test.csv   - one softmax layer, 12 -> 10
                                         (12 highest-variance pixels; its
                                         rounding subproblems have 13
                                         variables, small enough for
                                         exhaustive solving)
  golden_metrics.json                  - recorded float accuracies
  golden_forward.json                  - per-layer outputs of the first
                                         test samples, computed with plain
                                         scalar loops

Everything is deterministic for a fixed seed; the committed files are
canonical (regeneration is only guaranteed identical for the same library
versions).  The files are written with standalone code on purpose, so
they double as an independent check of the main package's readers.
"""

import json
import math
import pathlib

import numpy as np
from sklearn.datasets import load_digits

SEED = 42
TEST_ROWS = 500
MICRO_FEATURES = 12
EPOCHS = 400
LEARNING_RATE = 0.5
WEIGHT_DECAY = 1e-4
GOLDEN_SAMPLES = 5

OUT_DIR = pathlib.Path(__file__).parent / "out"


def train_softmax_layer(x, labels, n_classes, seed):
    """Full-batch gradient descent on softmax cross-entropy."""
    rng = np.random.default_rng(seed)
    t, f = x.shape
    w = 0.01 * rng.normal(size=(n_classes, f))
    b = np.zeros(n_classes)
    onehot = np.eye(n_classes)[labels]
    for _ in range(EPOCHS):
        logits = x @ w.T + b
        logits -= logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        probs = e / e.sum(axis=1, keepdims=True)
        grad = probs - onehot
        w -= LEARNING_RATE * (grad.T @ x / t + WEIGHT_DECAY * w)
        b -= LEARNING_RATE * grad.mean(axis=0)
    return w, b


def scalar_forward(weights, bias, x):
    """Scalar-loop pre-activation and softmax, independent of numpy matmul."""
    n = len(bias)
    pre = []
    for i in range(n):
        acc = bias[i]
        for j in range(len(x)):
            acc += weights[i][j] * x[j]
        pre.append(acc)
    m = max(pre)
    exps = [math.exp(p - m) for p in pre]
    total = sum(exps)
    post = [e / total for e in exps]
    return pre, post


def scalar_accuracy(weights, bias, xs, labels):
    hits = 0
    for x, label in zip(xs, labels):
        _, post = scalar_forward(weights, bias, list(x))
        best = post.index(max(post))  # ties resolve to the lowest index
        hits += best == label
    return hits / len(xs)


def write_model(path, weights, bias):
    payload = {
        "version": 1,
        "layers": [
            {
                "weights": [[float(v) for v in row] for row in weights],
                "bias": [float(v) for v in bias],
                "activation": "softmax",
            }
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def write_dataset(path, xs, labels):
    width = xs.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label," + ",".join(f"f{i}" for i in range(width)) + "\n")
        for x, label in zip(xs, labels):
            fh.write(str(int(label)) + "," + ",".join(repr(float(v)) for v in x) + "\n")


def main(out_dir=OUT_DIR):
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    digits = load_digits()
    x = digits.data / 16.0  # pixel range [0, 16] -> [0, 1]
    labels = digits.target

    rng = np.random.default_rng(SEED)
    order = rng.permutation(len(x))
    test_idx, train_idx = order[:TEST_ROWS], order[TEST_ROWS:]
    x_train, y_train = x[train_idx], labels[train_idx]
    x_test, y_test = x[test_idx], labels[test_idx]

    metrics = {"seed": SEED, "test_rows": TEST_ROWS, "fixtures": {}}

    # full 64-feature fixture
    w, b = train_softmax_layer(x_train, y_train, 10, SEED)
    write_model(out_dir / "mnist1_model.json", w, b)
    write_dataset(out_dir / "mnist1_test.csv", x_test, y_test)
    metrics["fixtures"]["mnist1"] = {
        "features": x.shape[1],
        "classes": 10,
        "float_accuracy": scalar_accuracy(w, b, x_test, y_test),
    }

    # 12-feature micro fixture: keep the highest-variance pixels
    variances = x_train.var(axis=0)
    keep = np.sort(np.argsort(variances)[::-1][:MICRO_FEATURES])
    w_m, b_m = train_softmax_layer(x_train[:, keep], y_train, 10, SEED)
    write_model(out_dir / "micro_model.json", w_m, b_m)
    write_dataset(out_dir / "micro_test.csv", x_test[:, keep], y_test)
    metrics["fixtures"]["micro"] = {
        "features": MICRO_FEATURES,
        "classes": 10,
        "kept_pixels": [int(k) for k in keep],
        "float_accuracy": scalar_accuracy(w_m, b_m, x_test[:, keep], y_test),
    }

    golden = {"samples": []}
    for k in range(GOLDEN_SAMPLES):
        pre, post = scalar_forward(w.tolist(), b.tolist(), list(x_test[k]))
        golden["samples"].append(
            {
                "index": k,
                "label": int(y_test[k]),
                "pre": pre,
                "post": post,
                "predicted": post.index(max(post)),
            }
        )
    with open(out_dir / "golden_forward.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(golden, fh, indent=1)
        fh.write("\n")

    with open(out_dir / "golden_metrics.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(metrics, fh, indent=1)
        fh.write("\n")

    print(json.dumps(metrics, indent=1))


if __name__ == "__main__":
    main()
