"""Trains the small LeNet fixtures and writes them in the dmt container format.

Usage: python make_fixtures.py MNIST_CSV OUT_DIR

MNIST_CSV holds one digit per row: 784 pixel values (0-255) followed by the
label. Everything written is deterministic for a fixed --seed.
"""

import argparse
import struct
from pathlib import Path

import numpy as np
import torch
from torch import nn

GOLDEN_COUNT = 24
TEST_COUNT = 1000
MIN_ACCURACY = 0.94


def lenet1():
    return nn.Sequential(
        nn.Conv2d(1, 4, 5), nn.ReLU(), nn.AvgPool2d(2),
        nn.Conv2d(4, 12, 5), nn.ReLU(), nn.AvgPool2d(2),
        nn.Flatten(), nn.Linear(192, 10))


def lenet5(pool=nn.AvgPool2d):
    return nn.Sequential(
        nn.Conv2d(1, 6, 5, padding=2), nn.ReLU(), pool(2),
        nn.Conv2d(6, 16, 5), nn.ReLU(), pool(2),
        nn.Flatten(), nn.Linear(400, 120), nn.ReLU(),
        nn.Linear(120, 84), nn.ReLU(), nn.Linear(84, 10))


ARCHES = {
    "lenet1": lenet1,
    "lenet5": lenet5,
    "lenet5-maxpool": lambda: lenet5(nn.MaxPool2d),
}


def layer_line(m):
    if isinstance(m, nn.Conv2d):
        return f"conv2d {m.out_channels} {m.in_channels} {m.kernel_size[0]} stride {m.stride[0]} padding {m.padding[0]}"
    if isinstance(m, nn.Linear):
        return f"dense {m.out_features} {m.in_features}"
    if isinstance(m, nn.AvgPool2d):
        return f"avgpool {m.kernel_size} stride {m.stride}"
    if isinstance(m, nn.MaxPool2d):
        return f"maxpool {m.kernel_size} stride {m.stride}"
    if isinstance(m, nn.ReLU):
        return "relu"
    if isinstance(m, nn.Flatten):
        return "flatten"
    raise ValueError(f"unsupported layer {m}")


def container_bytes(model):
    layers = list(model)
    lines = ["dmt-model 1", "endian little", "input 1 28 28", f"layers {len(layers)}"]
    lines += [layer_line(m) for m in layers]
    blobs = []
    for i, m in enumerate(layers):
        if isinstance(m, (nn.Conv2d, nn.Linear)):
            blobs.append((i, "weight", m.weight))
            blobs.append((i, "bias", m.bias))
    lines.append(f"blobs {len(blobs)}")
    for i, name, t in blobs:
        lines.append(f"blob {i} {name} " + " ".join(str(d) for d in t.shape))
    lines.append("end")
    out = ("\n".join(lines) + "\n").encode("ascii")
    for _, _, t in blobs:
        out += t.detach().numpy().astype("<f4").tobytes()
    return out


def idx_images(pixels):
    n = pixels.shape[0]
    return struct.pack(">IIII", 0x803, n, 28, 28) + pixels.astype(np.uint8).tobytes()


def idx_labels(labels):
    return struct.pack(">II", 0x801, len(labels)) + np.asarray(labels, dtype=np.uint8).tobytes()


def idx_floats(rows):
    rows = np.asarray(rows, dtype=">f4")
    return struct.pack(">III", 0xD02, rows.shape[0], rows.shape[1]) + rows.tobytes()


def train(model, x, y, seed, epochs):
    torch.manual_seed(seed)
    opt = torch.optim.Adam(model.parameters(), lr=2e-3)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, epochs)
    loss_fn = nn.CrossEntropyLoss()
    gen = torch.Generator().manual_seed(seed)
    for _ in range(epochs):
        model.train()
        perm = torch.randperm(len(x), generator=gen)
        for start in range(0, len(x), 64):
            idx = perm[start:start + 64]
            opt.zero_grad()
            loss_fn(model(x[idx]), y[idx]).backward()
            opt.step()
        sched.step()
    model.eval()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--epochs", type=int, default=40)
    args = ap.parse_args()

    torch.use_deterministic_algorithms(True)
    torch.set_num_threads(1)
    raw = np.loadtxt(args.csv, delimiter=",", dtype=np.int64)
    pixels, labels = raw[:, :784], raw[:, 784]
    order = np.random.default_rng(args.seed).permutation(len(raw))
    test_idx, train_idx = order[:TEST_COUNT], order[TEST_COUNT:]

    def tensor(idx):
        return torch.tensor(pixels[idx].reshape(-1, 1, 28, 28) / 255.0, dtype=torch.float32)

    x_train, y_train = tensor(train_idx), torch.tensor(labels[train_idx])
    x_test, y_test = tensor(test_idx), torch.tensor(labels[test_idx])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "mnist-test-images.idx").write_bytes(idx_images(pixels[test_idx]))
    (out / "mnist-test-labels.idx").write_bytes(idx_labels(labels[test_idx]))
    (out / "golden-images.idx").write_bytes(idx_images(pixels[test_idx[:GOLDEN_COUNT]]))

    notes = [f"seed {args.seed}", f"epochs {args.epochs}", f"train {len(train_idx)}", f"test {len(test_idx)}"]
    for name, build in ARCHES.items():
        torch.manual_seed(args.seed)
        model = build()
        train(model, x_train, y_train, args.seed, args.epochs)
        with torch.no_grad():
            acc = (model(x_test).argmax(1) == y_test).float().mean().item()
            golden = model(x_test[:GOLDEN_COUNT]).numpy()
        if acc < MIN_ACCURACY:
            raise SystemExit(f"{name}: test accuracy {acc:.4f} below {MIN_ACCURACY}; refusing to export")
        (out / f"{name}.dmtm").write_bytes(container_bytes(model))
        (out / f"{name}-golden-logits.idx").write_bytes(idx_floats(golden))
        notes.append(f"{name} accuracy {acc:.4f}")
        print(notes[-1], flush=True)
    (out / "training.txt").write_text("\n".join(notes) + "\n")


if __name__ == "__main__":
    main()
