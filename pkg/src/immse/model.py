"""Two-user Gaussian multiple-access channel and the draws that drive every estimator.

The channel is

    y = sqrt(snr) H1 P1 x1 + sqrt(snr) H2 P2 x2 + n,    n ~ CN(0, I),

with x1, x2 drawn independently from finite constellations. Noise is
circularly symmetric: real and imaginary parts each have variance 1/2.

Expectations over (x1, x2, n) are taken over a `Draws` stream, produced either
by seeded Monte Carlo (`McConfig`) or by a Gauss-Hermite product rule over the
noise (`GaussHermite`). Draws depend only on the constellation priors,
the noise dimension and the config, never on snr, H or P, so evaluating a
perturbed model with the same config reuses identical random numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence, Union

import numpy as np

JOINT_ALPHABET_CAP = 4096


class ModelError(ValueError):
    """Invalid or dimensionally inconsistent channel description."""


class ConfigError(ValueError):
    """Invalid Monte Carlo or quadrature configuration."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Constellation:
    """Finite input alphabet: `points` has shape (K, n_t), `priors` shape (K,)."""

    points: np.ndarray
    priors: np.ndarray
    name: str = "custom"
    normalized: bool = False

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=complex))
        pri = np.asarray(self.priors, dtype=float).ravel()
        if pts.shape[0] != pri.shape[0]:
            raise ModelError(f"{pts.shape[0]} points but {pri.shape[0]} priors")
        if np.any(pri <= 0):
            raise ModelError("priors must be strictly positive")
        if abs(pri.sum() - 1.0) > 1e-12:
            raise ModelError(f"priors sum to {pri.sum()!r}, not 1")
        mean = pri @ pts
        if np.max(np.abs(mean)) > 1e-12:
            raise ModelError(f"constellation is not zero mean (mean={mean})")
        pri = pri.copy()
        pri.setflags(write=False)
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "priors", pri)
        if self.normalized:
            cov = self.covariance()
            if np.max(np.abs(cov - np.eye(self.dim))) > 1e-10:
                raise ModelError("constellation flagged normalized but covariance is not identity")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def covariance(self) -> np.ndarray:
        """E[x x^H] under the priors."""
        return np.einsum("k,ki,kj->ij", self.priors, self.points, self.points.conj())

    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.points, axis=1)))

    def is_real(self) -> bool:
        return bool(np.all(self.points.imag == 0))


def _product_constellation(base: np.ndarray, n_t: int, name: str) -> Constellation:
    grids = np.meshgrid(*([base] * n_t), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return Constellation(pts, np.full(len(pts), 1.0 / len(pts)), name=name, normalized=True)


def bpsk(n_t: int = 1) -> Constellation:
    """Equiprobable {+1, -1} on each of `n_t` components (2**n_t points)."""
    return _product_constellation(np.array([1.0, -1.0]), n_t, "bpsk")


def qpsk(n_t: int = 1) -> Constellation:
    """Unit-energy QPSK on each of `n_t` components (4**n_t points)."""
    base = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / math.sqrt(2)
    return _product_constellation(base, n_t, "qpsk")


def null_constellation(n_t: int) -> Constellation:
    """Single point at the origin; the user is silent."""
    return Constellation(np.zeros((1, n_t)), np.ones(1), name="null")


CONSTELLATIONS = {"bpsk": bpsk, "qpsk": qpsk}


@dataclass(frozen=True, eq=False)
class UserLink:
    """Channel H (n_r x n_t) and precoder P (n_t x n_t) for one user.

    The precoder must satisfy trace(P P^H) <= power_budget; the budget
    defaults to n_t.
    """

    H: np.ndarray
    P: np.ndarray
    power_budget: float | None = None

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=complex))
        P = np.atleast_2d(np.asarray(self.P, dtype=complex))
        if P.shape[0] != P.shape[1]:
            raise ModelError(f"precoder must be square, got {P.shape}")
        if H.shape[1] != P.shape[0]:
            raise ModelError(f"H is {H.shape} but P is {P.shape}")
        budget = float(P.shape[0]) if self.power_budget is None else float(self.power_budget)
        power = float(np.real(np.trace(P @ P.conj().T)))
        if power > budget * (1 + 1e-12):
            raise ModelError(f"precoder power {power:.6g} exceeds budget {budget:.6g}")
        object.__setattr__(self, "H", _frozen(H))
        object.__setattr__(self, "P", _frozen(P))
        object.__setattr__(self, "power_budget", budget)

    @property
    def n_r(self) -> int:
        return self.H.shape[0]

    @property
    def n_t(self) -> int:
        return self.H.shape[1]


def effective_matrix(link: UserLink) -> np.ndarray:
    """The product H P seen by the user's input vector."""
    if link.H.shape[1] != link.P.shape[0]:
        raise ModelError(f"H is {link.H.shape} but P is {link.P.shape}")
    return link.H @ link.P


@dataclass(frozen=True, eq=False)
class MacModel:
    link1: UserLink
    link2: UserLink
    c1: Constellation
    c2: Constellation
    snr: float
    n_r: int | None = None
    alphabet_cap: int = JOINT_ALPHABET_CAP

    def __post_init__(self):
        n_r = self.link1.n_r if self.n_r is None else int(self.n_r)
        object.__setattr__(self, "n_r", n_r)
        if n_r < 1:
            raise ModelError("n_r must be positive")
        if self.link1.n_r != n_r or self.link2.n_r != n_r:
            raise ModelError(f"links have n_r {self.link1.n_r}, {self.link2.n_r}; expected {n_r}")
        if self.c1.dim != self.link1.n_t:
            raise ModelError(f"user 1 constellation has dim {self.c1.dim}, link n_t {self.link1.n_t}")
        if self.c2.dim != self.link2.n_t:
            raise ModelError(f"user 2 constellation has dim {self.c2.dim}, link n_t {self.link2.n_t}")
        snr = float(self.snr)
        if not math.isfinite(snr) or snr < 0:
            raise ModelError(f"snr must be finite and nonnegative, got {self.snr!r}")
        object.__setattr__(self, "snr", snr)
        if self.c1.size * self.c2.size > self.alphabet_cap:
            raise ModelError(
                f"joint alphabet {self.c1.size}x{self.c2.size} exceeds cap {self.alphabet_cap}"
            )

    @property
    def A(self) -> np.ndarray:
        """H1 P1."""
        return effective_matrix(self.link1)

    @property
    def B(self) -> np.ndarray:
        """H2 P2."""
        return effective_matrix(self.link2)

    def link(self, user: int) -> UserLink:
        return _pick(user, self.link1, self.link2)

    def constellation(self, user: int) -> Constellation:
        return _pick(user, self.c1, self.c2)

    def with_snr(self, snr: float) -> "MacModel":
        return replace(self, snr=snr)

    def with_link(self, user: int, H=None, P=None, check_power: bool = True) -> "MacModel":
        old = self.link(user)
        budget = old.power_budget if check_power else math.inf
        new = UserLink(old.H if H is None else H, old.P if P is None else P, power_budget=budget)
        return replace(self, **{f"link{user}": new})

    def is_real(self) -> bool:
        mats = (self.link1.H, self.link1.P, self.link2.H, self.link2.P)
        return all(np.all(m.imag == 0) for m in mats) and self.c1.is_real() and self.c2.is_real()


def _pick(user: int, first, second):
    if user == 1:
        return first
    if user == 2:
        return second
    raise ValueError(f"user must be 1 or 2, got {user!r}")


def unit_scalar_mac(snr: float, constellation: str = "bpsk") -> MacModel:
    """Scalar MAC with unit channels and precoders for both users."""
    make = CONSTELLATIONS[constellation]
    one = UserLink(np.eye(1), np.eye(1))
    return MacModel(one, one, make(1), make(1), snr)


def bpsk_scalar_mac(snr: float) -> MacModel:
    """y = sqrt(snr) x1 + sqrt(snr) x2 + n with equiprobable x_i in {+1, -1}."""
    return unit_scalar_mac(snr, "bpsk")


def single_user(model: MacModel, user: int = 1) -> MacModel:
    """Copy of `model` with the other user's precoder set to zero."""
    other = 2 if user == 1 else 1
    link = model.link(other)
    return model.with_link(other, P=np.zeros_like(link.P))


# ---------------------------------------------------------------------------
# Expectation engines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class McConfig:
    """Seeded Monte Carlo over (x1, x2, n).

    Batch b draws from the b-th child of ``SeedSequence(seed)``, so the stream
    is identical whatever the worker count.
    """

    seed: int = 0
    samples: int = 200_000
    batch: int = 8192
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    iid = True

    @property
    def n_batches(self) -> int:
        return -(-self.samples // self.batch)


@dataclass(frozen=True)
class GaussHermite:
    """Deterministic product-rule quadrature over the noise, exact sums over inputs.

    Uses `nodes` Gauss-Hermite points per real noise dimension, so the rule
    has nodes**(2 n_r) points per joint input. Intended for n_r <= 2.
    """

    nodes: int = 32
    batch: int = 16384
    workers: int = 1
    max_points: int = 50_000_000

    def __post_init__(self):
        if self.nodes < 1:
            raise ConfigError("nodes must be >= 1")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")

    iid = False


ExpectationConfig = Union[McConfig, GaussHermite]


@dataclass(frozen=True, eq=False)
class Draws:
    """One batch of (x1 index, x2 index, noise) with quadrature weights.

    For Monte Carlo every weight is 1/total.
    """

    i1: np.ndarray
    i2: np.ndarray
    noise: np.ndarray
    weights: np.ndarray
    total: int
    iid: bool = field(default=True)

    def __len__(self) -> int:
        return len(self.i1)


def _mc_batch(priors1, priors2, n_r: int, cfg: McConfig, child, size: int) -> Draws:
    rng = np.random.default_rng(child)
    u1 = rng.random(size)
    u2 = rng.random(size)
    g = rng.standard_normal((size, n_r, 2))
    noise = (g[..., 0] + 1j * g[..., 1]) / math.sqrt(2.0)
    i1 = np.minimum(np.searchsorted(np.cumsum(priors1), u1, side="right"), len(priors1) - 1)
    i2 = np.minimum(np.searchsorted(np.cumsum(priors2), u2, side="right"), len(priors2) - 1)
    w = np.full(size, 1.0 / cfg.samples)
    return Draws(i1, i2, noise, w, cfg.samples, True)


def batch_plan(c1: Constellation, c2: Constellation, n_r: int, cfg: ExpectationConfig) -> list:
    """Work items; `make_draws(item)` turns each into a `Draws` batch."""
    if isinstance(cfg, McConfig):
        children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_batches)
        plan = []
        for b, child in enumerate(children):
            size = min(cfg.batch, cfg.samples - b * cfg.batch)
            plan.append(("mc", c1.priors, c2.priors, n_r, cfg, child, size))
        return plan
    if isinstance(cfg, GaussHermite):
        grid = cfg.nodes ** (2 * n_r)
        total = c1.size * c2.size * grid
        if total > cfg.max_points:
            raise ConfigError(f"quadrature needs {total} points, above max_points={cfg.max_points}")
        return [("gh", c1.priors, c2.priors, n_r, cfg, start, min(cfg.batch, total - start), total)
                for start in range(0, total, cfg.batch)]
    raise ConfigError(f"unknown expectation config {cfg!r}")


def _gh_batch(priors1, priors2, n_r, cfg: GaussHermite, start, size, total) -> Draws:
    t, w = np.polynomial.hermite.hermgauss(cfg.nodes)
    dims = 2 * n_r
    grid = cfg.nodes ** dims
    m = np.arange(start, start + size)
    k, g = np.divmod(m, grid)
    i1, i2 = np.divmod(k, len(priors2))
    digits = np.empty((size, dims), dtype=int)
    rem = g
    for d in range(dims - 1, -1, -1):
        rem, digits[:, d] = np.divmod(rem, cfg.nodes)
    # each real noise component ~ N(0, 1/2) has density exp(-t^2)/sqrt(pi)
    vals = t[digits]
    weights = priors1[i1] * priors2[i2] * np.prod(w[digits], axis=1) / math.pi ** n_r
    noise = vals[:, 0::2] + 1j * vals[:, 1::2]
    return Draws(i1, i2, noise, weights, total, False)


def make_draws(item) -> Draws:
    if item[0] == "mc":
        return _mc_batch(*item[1:])
    return _gh_batch(*item[1:])


def sample_outputs(model: MacModel, mc: McConfig) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield (x1 index, x2 index, y) arrays one batch at a time."""
    if not isinstance(mc, McConfig):
        raise ConfigError("sample_outputs needs a McConfig")
    A, B = model.A, model.B
    s = math.sqrt(model.snr)
    for item in batch_plan(model.c1, model.c2, model.n_r, mc):
        d = make_draws(item)
        y = s * (model.c1.points[d.i1] @ A.T) + s * (model.c2.points[d.i2] @ B.T) + d.noise
        yield d.i1, d.i2, y


def as_matrix(values: Sequence) -> np.ndarray:
    return np.atleast_2d(np.asarray(values, dtype=complex))
