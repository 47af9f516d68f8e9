"""Weighted expectations over a stream of draws, with Monte Carlo standard errors.

Batches may be evaluated on a thread pool; partial sums are reduced in batch
order with pairwise summation, so results do not depend on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .model import Constellation, Draws, ExpectationConfig, MacModel, batch_plan, make_draws


@dataclass(frozen=True)
class Estimate:
    """Expectation estimate; `stderr` is entrywise and zero for quadrature."""

    value: np.ndarray | complex | float
    stderr: np.ndarray | float

    def __iter__(self):
        yield self.value
        yield self.stderr


def _partial(item, fn):
    d: Draws = make_draws(item)
    out = {}
    for name, f in fn(d).items():
        f = np.asarray(f)
        w = d.weights
        s1 = np.tensordot(w, f, axes=1)
        if d.iid:
            s2 = np.tensordot(w, f.real ** 2, axes=1) + np.tensordot(w, f.imag ** 2, axes=1) * 1j
        else:
            s2 = None
        out[name] = (s1, s2)
    return out, d.total, d.iid


def expect(c1: Constellation, c2: Constellation, n_r: int, cfg: ExpectationConfig,
           fn: Callable[[Draws], Mapping[str, np.ndarray]]) -> dict[str, Estimate]:
    """E[fn(draws)] for every named per-sample array returned by `fn`."""
    plan = batch_plan(c1, c2, n_r, cfg)
    if cfg.workers > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda it: _partial(it, fn), plan))
    else:
        parts = [_partial(it, fn) for it in plan]
    total, iid = parts[0][1], parts[0][2]
    result = {}
    for name in parts[0][0]:
        s1 = np.sum(np.stack([p[0][name][0] for p in parts]), axis=0)
        if iid:
            s2 = np.sum(np.stack([p[0][name][1] for p in parts]), axis=0)
            var_re = np.maximum(s2.real - s1.real ** 2, 0.0)
            var_im = np.maximum(s2.imag - np.imag(s1) ** 2, 0.0)
            if total > 1:
                stderr = np.sqrt((var_re + var_im) / (total - 1))
            else:
                stderr = np.full(np.shape(s1), np.inf)
        else:
            stderr = np.zeros(np.shape(s1))
        if np.ndim(s1) == 0:
            s1, stderr = s1[()], float(stderr)
        result[name] = Estimate(s1, stderr)
    return result


def expect_model(model: MacModel, cfg: ExpectationConfig,
                 fn: Callable[[Draws], Mapping[str, np.ndarray]]) -> dict[str, Estimate]:
    return expect(model.c1, model.c2, model.n_r, cfg, fn)


def outputs(model: MacModel, d: Draws, snr: float | None = None) -> np.ndarray:
    """Channel outputs for a batch of draws, optionally at a different snr."""
    s = np.sqrt(model.snr if snr is None else snr)
    return s * (model.c1.points[d.i1] @ model.A.T) + s * (model.c2.points[d.i2] @ model.B.T) + d.noise
