"""Monte Carlo oracles: first passage through a moving boundary and the particle system.

Random numbers come from counter-based Philox streams.  Paths are split
into fixed blocks of ``BLOCK`` paths and block ``j`` uses the key
``(seed, j)``, so the output does not depend on how blocks are scheduled
over threads.  ``HEATPOT_THREADS`` caps the worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BoundaryCurve

WIENER = "wiener"
OU = "ou"
BLOCK = 8192


@dataclass(frozen=True)
class McConfig:
    paths: int
    dt: float
    seed: int = 0
    bridge: bool = True

    def __post_init__(self):
        if not int(self.paths) >= 1:
            raise ValueError(f"path count must be at least 1, got {self.paths}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class McEstimate:
    """Estimates on the requested times with standard error ``std / sqrt(paths)``."""

    t: np.ndarray
    values: np.ndarray
    se: np.ndarray
    paths: int

    def within(self, ref, k: float = 3.0) -> np.ndarray:
        """Whether ``ref`` lies within ``k`` standard errors (with a floor for zero-variance nodes)."""
        return np.abs(np.asarray(ref) - self.values) <= k * np.maximum(self.se, 1.0 / self.paths)


def _rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) | (int(block) << 64)))


def _workers() -> int:
    env = os.environ.get("HEATPOT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _step_nodes(times: np.ndarray, dt: float) -> tuple:
    """Uniform steps of size ``dt`` with the requested times inserted; index of each time."""
    T = float(times.max())
    base = np.arange(0.0, T, dt)
    nodes = np.unique(np.concatenate([base, times, [0.0]]))
    # merge nodes closer than dt/100 to a requested time
    keep = np.ones(nodes.size, dtype=bool)
    for v in times:
        close = (np.abs(nodes - v) < 1e-2 * dt) & (nodes != v)
        keep &= ~close
    nodes = nodes[keep]
    return nodes, np.searchsorted(nodes, times)


def _crossing(x0, x1, b0, b1, h):
    """Brownian-bridge probability of touching the chord; 1 when an endpoint is below it."""
    return np.exp(-2.0 * np.maximum((x0 - b0) * (x1 - b1), 0.0) / h)


def _first_passage_block(process, bvals, nodes, idx, z, n, seed, block, bridge):
    rng = _rng(seed, block)
    x = np.full(n, float(z))
    surv = np.ones(n)
    out = np.empty((idx.size, n))
    rec = {int(k): i for i, k in enumerate(idx)}
    if 0 in rec:
        out[rec[0]] = 1.0 - surv
    for k in range(1, nodes.size):
        h = nodes[k] - nodes[k - 1]
        zk = rng.standard_normal(n)
        if process == OU:
            x1 = math.exp(-h) * x + math.sqrt(-0.5 * math.expm1(-2.0 * h)) * zk
        else:
            x1 = x + math.sqrt(h) * zk
        above = x1 > bvals[k]
        if bridge:
            p = _crossing(x, x1, bvals[k - 1], bvals[k], h)
            surv *= np.where(above, 1.0 - p, 0.0)
        else:
            surv *= above
        x = x1
        if k in rec:
            out[rec[k]] = 1.0 - surv
    return out.sum(axis=1), (out * out).sum(axis=1)


def first_passage(process: str, boundary: BoundaryCurve, z: float, times: Sequence[float],
                  config: McConfig) -> McEstimate:
    """Crossing probability ``P(hit b before t)`` of a Wiener or standard OU path from ``z``.

    Wiener steps are exact Gaussian increments; OU steps sample the exact
    transition ``x' = e^{-h} x + sqrt((1 - e^{-2h})/2) Z``.  Each path
    carries its survival weight, multiplied per step by one minus the
    bridge crossing probability ``exp(-2 (x_k - b_k)(x_{k+1} - b_{k+1})/h)``
    against the chord of the boundary.
    """
    if process not in (WIENER, OU):
        raise ValueError(f"process must be {WIENER!r} or {OU!r}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    if not z > float(boundary.value(0.0)):
        raise ValueError("z must lie strictly above the boundary at t = 0")
    nodes, idx = _step_nodes(times, config.dt)
    bvals = np.asarray(boundary.value(nodes), dtype=float) * np.ones_like(nodes)
    sizes = [min(BLOCK, config.paths - s) for s in range(0, config.paths, BLOCK)]
    job = [(process, bvals, nodes, idx, z, n, config.seed, j, config.bridge)
           for j, n in enumerate(sizes)]
    workers = min(_workers(), len(job))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda a: _first_passage_block(*a), job))
    else:
        parts = [_first_passage_block(*a) for a in job]
    # fixed-order reduction
    s1 = np.zeros(times.size)
    s2 = np.zeros(times.size)
    for a, b in parts:
        s1 += a
        s2 += b
    m = config.paths
    mean = s1 / m
    var = np.maximum(s2 / m - mean * mean, 0.0)
    return McEstimate(times, mean, np.sqrt(var / m), m)


def meanfield_particles(alpha: float, z: float, times: Sequence[float],
                        config: McConfig) -> McEstimate:
    """Loss fraction ``L(t)`` of ``paths`` interacting particles.

    Particle ``i`` has distance to default ``z + W_i(t) - alpha L(t)`` and is
    absorbed when it reaches 0.  Equivalently ``z + W_i`` is absorbed at the
    level ``alpha L``.  The level is frozen over a step and updated from the
    end-of-step loss fraction (explicit coupling); particles left below the
    raised level are absorbed at the next step, so a cascade propagates one
    round per step.  With ``bridge`` a survivor is absorbed with the bridge
    crossing probability against the frozen level.
    """
    if not alpha >= 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if not z > 0:
        raise ValueError("z must be positive")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    nodes, idx = _step_nodes(times, config.dt)
    m = config.paths
    sizes = [min(BLOCK, m - s) for s in range(0, m, BLOCK)]
    rngs = [_rng(config.seed, j) for j in range(len(sizes))]
    xs = [np.full(n, float(z)) for n in sizes]
    lost = 0
    L = np.zeros(nodes.size)
    for k in range(1, nodes.size):
        h = nodes[k] - nodes[k - 1]
        level = alpha * lost / m
        for j, rng in enumerate(rngs):
            x = xs[j]
            zk = rng.standard_normal(x.size)
            u = rng.random(x.size) if config.bridge else None
            x1 = x + math.sqrt(h) * zk
            dead = (x <= level) | (x1 <= level)
            if config.bridge:
                dead |= u < _crossing(x, x1, level, level, h)
            lost += int(dead.sum())
            xs[j] = x1[~dead]
        L[k] = lost / m
    vals = L[idx]
    return McEstimate(times, vals, np.sqrt(vals * (1.0 - vals) / m), m)
