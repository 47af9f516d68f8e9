"""Plain-text model files.

One ``key = value`` pair per line; ``#`` starts a comment. Matrices are
row-major: rows separated by ``;``, entries by whitespace, each entry ``re,im``
or a bare real. ``identity`` and ``zero`` are accepted for any matrix.

    n_r = 2
    n_t = 2
    H1 = 1,0 0.5,-0.2 ; 0,0.3 1,0
    P1 = identity
    H2 = identity
    P2 = 0.7,0 0,0 ; 0,0 0.7,0
    c1 = qpsk
    c2 = bpsk
    snr = 1.0
    seed = 7

Explicit constellations use ``c1_points`` (one point per ``;``-separated row)
and ``c1_priors`` (whitespace-separated); priors default to uniform.
Other keys: ``samples``, ``batch``, ``power_budget``, ``n_t1``/``n_t2`` for
users with different dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import CONSTELLATIONS, Constellation, McConfig, MacModel, ModelError, UserLink

KEYS = {"n_r", "n_t", "n_t1", "n_t2", "H1", "P1", "H2", "P2", "c1", "c2", "c1_points",
        "c1_priors", "c2_points", "c2_priors", "snr", "seed", "samples", "batch", "power_budget"}


class ModelFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<model>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class LoadedModel:
    model: MacModel
    mc: McConfig


def _entry(tok: str) -> complex:
    parts = tok.split(",")
    if len(parts) == 1:
        return complex(float(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    raise ValueError(f"bad complex entry {tok!r}; expected re,im")


def parse_matrix(text: str, shape: tuple[int, int]) -> np.ndarray:
    t = text.strip().lower()
    if t == "identity":
        if shape[0] != shape[1]:
            raise ValueError(f"identity needs a square shape, got {shape[0]}x{shape[1]}")
        return np.eye(shape[0], dtype=complex)
    if t == "zero":
        return np.zeros(shape, dtype=complex)
    rows = [r.split() for r in text.split(";")]
    M = np.array([[_entry(tok) for tok in r] for r in rows if r], dtype=complex)
    if M.shape != shape:
        raise ValueError(f"expected a {shape[0]}x{shape[1]} matrix, got {M.shape}")
    return M


def _constellation(kv, user: int, n_t: int) -> Constellation:
    key_pts, key_pri = f"c{user}_points", f"c{user}_priors"
    if key_pts in kv:
        line, text = kv[key_pts]
        rows = [r.split() for r in text.split(";") if r.split()]
        try:
            pts = np.array([[_entry(t) for t in r] for r in rows], dtype=complex)
        except ValueError as exc:
            raise ModelFileError(str(exc), line) from None
        if pts.ndim != 2 or pts.shape[1] != n_t:
            raise ModelFileError(f"points must each have {n_t} entries", line)
        if key_pri in kv:
            pline, ptext = kv[key_pri]
            try:
                pri = np.array([float(t) for t in ptext.split()])
            except ValueError as exc:
                raise ModelFileError(str(exc), pline) from None
        else:
            pri = np.full(len(pts), 1.0 / len(pts))
        try:
            return Constellation(pts, pri, name=f"custom{user}")
        except ModelError as exc:
            raise ModelFileError(str(exc), line) from None
    line, name = kv.get(f"c{user}", (None, "bpsk"))
    name = name.strip().lower()
    if name not in CONSTELLATIONS:
        raise ModelFileError(f"unknown constellation {name!r}; known: {', '.join(CONSTELLATIONS)}", line)
    return CONSTELLATIONS[name](n_t)


def parse_model_text(text: str, source: str = "<model>") -> LoadedModel:
    kv: dict[str, tuple[int, str]] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelFileError(f"expected 'key = value', got {line!r}", no, source)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ModelFileError(f"unknown key {key!r}", no, source)
        if key in kv:
            raise ModelFileError(f"duplicate key {key!r} (first on line {kv[key][0]})", no, source)
        kv[key] = (no, value)

    def scalar(key, conv, default):
        if key not in kv:
            return default
        no, v = kv[key]
        try:
            return conv(v)
        except ValueError:
            raise ModelFileError(f"{key}: cannot parse {v!r}", no, source) from None

    try:
        n_r = scalar("n_r", int, 1)
        n_t = scalar("n_t", int, 1)
        dims = {1: scalar("n_t1", int, n_t), 2: scalar("n_t2", int, n_t)}
        budget = scalar("power_budget", float, None)
        snr = scalar("snr", float, 1.0)
        seed = scalar("seed", int, 0)
        samples = scalar("samples", int, McConfig.samples)
        batch = scalar("batch", int, McConfig.batch)
        links = {}
        for u in (1, 2):
            mats = {}
            for name, shape in ((f"H{u}", (n_r, dims[u])), (f"P{u}", (dims[u], dims[u]))):
                if name in kv:
                    no, v = kv[name]
                    try:
                        mats[name[0]] = parse_matrix(v, shape)
                    except ValueError as exc:
                        raise ModelFileError(f"{name}: {exc}", no, source) from None
                else:
                    try:
                        mats[name[0]] = parse_matrix("identity", shape)
                    except ValueError as exc:
                        raise ModelFileError(f"{name} missing and {exc}", None, source) from None
            try:
                links[u] = UserLink(mats["H"], mats["P"], power_budget=budget)
            except ModelError as exc:
                no = kv.get(f"P{u}", (None,))[0]
                raise ModelFileError(str(exc), no, source) from None
        try:
            c1 = _constellation(kv, 1, dims[1])
            c2 = _constellation(kv, 2, dims[2])
        except ModelFileError as exc:
            raise ModelFileError(str(exc).split(": ", 1)[-1], exc.line, source) from None
        model = MacModel(links[1], links[2], c1, c2, snr, n_r)
        mc = McConfig(seed=seed, samples=samples, batch=batch)
    except ModelFileError:
        raise
    except ValueError as exc:  # ModelError, ConfigError
        raise ModelFileError(str(exc), None, source) from None
    return LoadedModel(model, mc)


def load_model(path: str | Path) -> LoadedModel:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read model file: {exc.strerror}", None, str(p)) from None
    return parse_model_text(text, str(p))
