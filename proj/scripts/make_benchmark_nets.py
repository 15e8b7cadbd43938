#!/usr/bin/env python3
"""Regenerate the benchmark policy networks shipped under data/.

continuum_world.nnet
    2-16-16-4 ReLU net fitted to the optimal policy of the slippery
    continuum world (20x20, pit [8,12]^2, goal [19,20]^2).

vcas_<ADV>.nnet
    4-20-20-3 ReLU nets, one per previous advisory, fitted to a simple
    projected-miss-distance alerting rule over (h, hdot0, hdot1, tau).

The outputs are deterministic for a fixed torch version and seed.
"""
import argparse
import pathlib

import numpy as np
import torch
from torch import nn

SEED = 7


def write_nnet(path, layers, labels, rule, header_comment):
    sizes = [layers[0][0].shape[1]] + [w.shape[0] for w, _ in layers]
    with open(path, "w") as f:
        for line in header_comment.splitlines():
            f.write(f"# {line}\n")
        f.write(f"{len(layers)}\n")
        f.write(" ".join(str(s) for s in sizes) + "\n")
        f.write(" ".join(labels) + "\n")
        f.write(rule + "\n")
        for w, b in layers:
            for row in w:
                f.write(" ".join(repr(float(v)) for v in row) + "\n")
            f.write(" ".join(repr(float(v)) for v in b) + "\n")


def export_layers(model, mean, scale):
    """Fold the input normalisation (x - mean) / scale into the first layer."""
    linears = [m for m in model if isinstance(m, nn.Linear)]
    layers = []
    for k, lin in enumerate(linears):
        w = lin.weight.detach().double().numpy().copy()
        b = lin.bias.detach().double().numpy().copy()
        if k == 0:
            b = b - w @ (mean / scale)
            w = w / scale[None, :]
        layers.append((w, b))
    return layers


def mlp(sizes):
    mods = []
    for i in range(len(sizes) - 1):
        mods.append(nn.Linear(sizes[i], sizes[i + 1]))
        if i + 2 < len(sizes):
            mods.append(nn.ReLU())
    return nn.Sequential(*mods)


def fit(model, x, y, epochs, lr=3e-3, batch=1024):
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    n = x.shape[0]
    gen = torch.Generator().manual_seed(SEED)
    for epoch in range(epochs):
        perm = torch.randperm(n, generator=gen)
        for i in range(0, n, batch):
            idx = perm[i:i + batch]
            opt.zero_grad()
            loss = loss_fn(model(x[idx]), y[idx])
            loss.backward()
            opt.step()
    with torch.no_grad():
        acc = (model(x).argmax(1) == y).float().mean().item()
    return acc


# ---------------------------------------------------------------- continuum

CW_MOVES = np.array([[0, 1], [0, -1], [-1, 0], [1, 0]], dtype=float)  # up down left right


def continuum_policy(res=0.25, gamma=0.97):
    n = int(round(20 / res)) + 1
    xs = np.linspace(0, 20, n)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    pit = (X >= 8) & (X < 12) & (Y >= 8) & (Y < 12)
    goal = (X >= 19) & (Y >= 19)
    V = np.zeros((n, n))
    step = int(round(1 / res))

    def shifted(V, move):
        dx, dy = int(move[0]) * step, int(move[1]) * step
        ix = np.clip(np.arange(n) + dx, 0, n - 1)
        iy = np.clip(np.arange(n) + dy, 0, n - 1)
        return V[np.ix_(ix, iy)]

    for _ in range(2000):
        nexts = [shifted(V, m) for m in CW_MOVES]
        Q = []
        for a in range(4):
            q = sum((0.7 if o == a else 0.1) * nexts[o] for o in range(4))
            Q.append(-0.01 + gamma * q)
        Q = np.stack(Q)
        Vn = Q.max(0)
        Vn[pit] = -1.0
        Vn[goal] = 1.0
        if np.abs(Vn - V).max() < 1e-10:
            V = Vn
            break
        V = Vn
    return xs, Q.argmax(0)


def make_continuum(out):
    torch.manual_seed(SEED)
    xs, pol = continuum_policy()
    rng = np.random.default_rng(SEED)
    pts = rng.uniform(0, 20, size=(60000, 2))
    ix = np.clip(np.rint(pts[:, 0] / 0.25).astype(int), 0, len(xs) - 1)
    iy = np.clip(np.rint(pts[:, 1] / 0.25).astype(int), 0, len(xs) - 1)
    labels = pol[ix, iy]
    mean = np.array([10.0, 10.0])
    scale = np.array([10.0, 10.0])
    x = torch.tensor((pts - mean) / scale, dtype=torch.float32)
    y = torch.tensor(labels, dtype=torch.long)
    model = mlp([2, 16, 16, 4])
    acc = fit(model, x, y, epochs=150)
    write_nnet(out / "continuum_world.nnet", export_layers(model, mean, scale),
               ["up", "down", "left", "right"], "argmax",
               f"continuum world policy network, fit accuracy {acc:.4f}")
    print("continuum_world.nnet accuracy", acc)


# --------------------------------------------------------------------- vcas

VCAS_ADVISORIES = ["COC", "DES1500", "CL1500"]


def vcas_rule(a_prev, h, hd0, hd1, tau):
    miss = h + (hd1 - hd0) * tau
    window = 500.0 if a_prev == "COC" else 700.0
    alert = (tau <= 25.0) & (np.abs(miss) < window)
    sense_des = miss >= 0.0
    if a_prev == "DES1500":
        sense_des = miss >= -200.0
    elif a_prev == "CL1500":
        sense_des = miss >= 200.0
    out = np.zeros(h.shape, dtype=int)
    out[alert & sense_des] = 1
    out[alert & ~sense_des] = 2
    return out


def make_vcas(out):
    rng = np.random.default_rng(SEED + 1)
    lo = np.array([-8000.0, -100.0, -100.0, 0.0])
    hi = np.array([8000.0, 100.0, 100.0, 40.0])
    mean = (lo + hi) / 2
    scale = (hi - lo) / 2
    n_wide, n_near = 40000, 80000
    wide = rng.uniform(lo, hi, size=(n_wide, 4))
    near = rng.uniform([-3000, -100, -100, 0], [3000, 100, 100, 30], size=(n_near, 4))
    pts = np.concatenate([wide, near])
    for a_prev in VCAS_ADVISORIES:
        torch.manual_seed(SEED)
        labels = vcas_rule(a_prev, *pts.T)
        x = torch.tensor((pts - mean) / scale, dtype=torch.float32)
        y = torch.tensor(labels, dtype=torch.long)
        model = mlp([4, 20, 20, 3])
        acc = fit(model, x, y, epochs=60)
        write_nnet(out / f"vcas_{a_prev}.nnet", export_layers(model, mean, scale),
                   VCAS_ADVISORIES, "argmax",
                   f"synthetic vertical advisory network, previous advisory {a_prev}\n"
                   f"inputs: h (ft), hdot0 (ft/s), hdot1 (ft/s), tau (s); fit accuracy {acc:.4f}")
        print(f"vcas_{a_prev}.nnet accuracy", acc)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    make_continuum(out)
    make_vcas(out)
