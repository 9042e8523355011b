"""Figure rendering for the report path.

Every CLI subcommand that writes a report also drops a small matplotlib
figure next to it; these helpers keep all plotting in one place.
"""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, ax, title, path):
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_coefficient_curves(K, N, theta, ts, sigma_vals, tau_vals, path):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(ts, sigma_vals, label="sigma", lw=1.5)
    ax.plot(ts, tau_vals, label="tau", lw=1.5, ls="--")
    ax.set_xlabel("t")
    ax.legend()
    _finish(fig, ax, f"distortion coefficients  K={K} N={N} theta={theta}", path)


def save_margin_curve(ts, margins, title, path, xlabel="t"):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    finite = [m if math.isfinite(m) else np.nan for m in margins]
    ax.plot(ts, finite, marker="o", ms=3, lw=1.2)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("margin")
    _finish(fig, ax, title, path)


def save_entropy_curve(ts, entropies, bounds, title, path):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(ts, entropies, marker="o", ms=3, lw=1.2, label="entropy of slice")
    ax.plot(ts, bounds, marker="s", ms=3, lw=1.2, ls="--", label="CD bound")
    ax.set_xlabel("t")
    ax.legend()
    _finish(fig, ax, title, path)


def save_needle_profiles(chains, path, max_chains=12):
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    for ci, chain in enumerate(chains[:max_chains]):
        if chain.density is None:
            continue
        ax.plot(chain.arclengths, chain.density, lw=1.2, label=f"chain {ci}")
    ax.set_xlabel("arclength")
    ax.set_ylabel("density")
    if chains:
        ax.legend(fontsize=7)
    _finish(fig, ax, "needle densities", path)


def save_distance_heatmap(space, path, title="glued distance matrix"):
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    im = ax.imshow(space.dist, cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85)
    _finish(fig, ax, title, path)


def save_field_profile(arcs, values, title, path):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(arcs, values, marker="o", ms=3, lw=1.2)
    ax.set_xlabel("arclength")
    ax.set_ylabel("field value")
    _finish(fig, ax, title, path)


def save_cylinder_comparison(ts, N, eps, path):
    from .coefficients import tau_coeff

    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ts = np.asarray(ts, float)
    ax.plot(ts, ts**N, lw=1.5, label="t^N (flat contraction)")
    for theta, style in ((eps, "--"), (1.25 * eps, ":")):
        vals = []
        for t in ts:
            c = tau_coeff(N, N + 1.0, float(t), theta).power(N + 1.0)
            vals.append(c.value if c.is_finite else np.nan)
        ax.plot(ts, vals, lw=1.5, ls=style, label=f"tau^(N+1) at theta={theta:.3f}")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    _finish(fig, ax, f"contraction comparison N={N}", path)
