"""Random feature maps ``phi_M(x) = M**-0.5 * (psi(x, w_1), ..., psi(x, w_M))``
and the kernels they converge to as ``M`` grows.

Three families are provided:

========================  ================================  ===================
kind                      psi(x, w)                          limit kernel
========================  ================================  ===================
``fourier-gaussian``      ``sqrt(2) cos(<w, x> + q)``         Gaussian, width sigma
``relu``                  ``max(<w, x>, 0)``                  arc-cosine, degree 1
``linear-sketch``         ``<w, x>``                          linear
========================  ================================  ===================

Fourier projections are drawn from ``N(0, sigma**-2 I)`` so the limit is the
Gaussian kernel ``exp(-|x - x'|**2 / (2 sigma**2))``; the others use
``N(0, I)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from sgdrf import _rng
from sgdrf.errors import ConfigError, DataFormatError

KINDS = ("fourier-gaussian", "relu", "linear-sketch")

# Parameters are drawn in blocks of this many features, block k from its own
# seeded stream, so a map with M features is a prefix of any larger map.
BLOCK = 64


@dataclass(frozen=True)
class FeatureMapSpec:
    kind: str
    M: int
    D: int
    sigma: float = 1.0
    seed: int = 0
    scaled: bool = True  # sqrt(2) factor on cosine features

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown feature kind {self.kind!r}; expected one of {KINDS}")
        if self.M < 1:
            raise ConfigError(f"M must be >= 1, got {self.M}")
        if self.D < 1:
            raise ConfigError(f"D must be >= 1, got {self.D}")
        if self.kind == "fourier-gaussian" and not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


def _project(X: np.ndarray, W: np.ndarray) -> np.ndarray:
    # einsum keeps each output's reduction order a function of D alone, so a
    # row projects bit-identically whether alone or inside a larger matrix
    # (BLAS gemm/gemv do not guarantee this).
    return np.einsum("nd,md->nm", X, W)


class FeatureMap:
    """Frozen random feature map.

    Parameters are drawn once from ``spec.seed`` (see :func:`build`) or
    supplied explicitly, e.g. to pin a test fixture.
    """

    def __init__(self, spec: FeatureMapSpec, W: np.ndarray, q: Optional[np.ndarray] = None):
        W = np.array(W, dtype=np.float64, copy=True)
        if W.shape != (spec.M, spec.D):
            raise ValueError(f"W has shape {W.shape}, expected {(spec.M, spec.D)}")
        if spec.kind == "fourier-gaussian":
            if q is None:
                raise ValueError("fourier-gaussian features need offsets q")
            q = np.array(q, dtype=np.float64, copy=True)
            if q.shape != (spec.M,):
                raise ValueError(f"q has shape {q.shape}, expected {(spec.M,)}")
            q.setflags(write=False)
        else:
            q = None
        W.setflags(write=False)
        self.spec = spec
        self.W = W
        self.q = q

    def __repr__(self):
        s = self.spec
        return f"FeatureMap(kind={s.kind!r}, M={s.M}, D={s.D}, sigma={s.sigma}, seed={s.seed})"

    @property
    def M(self) -> int:
        return self.spec.M

    @property
    def D(self) -> int:
        return self.spec.D

    @property
    def kappa(self) -> float:
        """Bound on ``|psi|``; infinite for unbounded families."""
        if self.spec.kind == "fourier-gaussian":
            return math.sqrt(2.0) if self.spec.scaled else 1.0
        return math.inf

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.kappa)

    @property
    def metadata(self) -> dict:
        meta = {
            "kind": self.spec.kind,
            "M": self.M,
            "D": self.D,
            "sigma": self.spec.sigma,
            "seed": self.spec.seed,
            "scaled": self.spec.scaled,
            "kappa": self.kappa,
        }
        if not self.bounded:
            meta["boundedness"] = "bounded only on bounded input sets"
        return meta

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.D:
            raise ValueError(f"input dimension mismatch: expected D={self.D}, got {X.shape[-1]}")
        return X

    def transform(self, X) -> np.ndarray:
        """Rows ``phi_M(x_i)`` for an ``n x D`` matrix (cost ``O(nMD)``)."""
        X = self._check(X)
        single = X.ndim == 1
        Z = _project(np.atleast_2d(X), self.W)
        kind = self.spec.kind
        if kind == "fourier-gaussian":
            Z += self.q
            np.cos(Z, out=Z)
            if self.spec.scaled:
                Z *= math.sqrt(2.0)
        elif kind == "relu":
            np.maximum(Z, 0.0, out=Z)
        Z /= math.sqrt(self.M)
        return Z[0] if single else Z

    def map(self, x) -> np.ndarray:
        x = self._check(x)
        if x.ndim != 1:
            raise ValueError("map takes a single vector; use transform for matrices")
        return self.transform(x)

    __call__ = transform

    def approx_kernel(self, x, x2) -> float:
        return float(np.dot(self.map(x), self.map(x2)))

    def gram(self, X, Y=None) -> np.ndarray:
        A = self.transform(X)
        B = A if Y is None else self.transform(Y)
        return A @ B.T

    def prefix(self, M: int) -> "FeatureMap":
        """The first ``M`` features (equal to ``build`` with the smaller M)."""
        if not 1 <= M <= self.M:
            raise ValueError(f"prefix size must lie in [1, {self.M}], got {M}")
        spec = replace(self.spec, M=M)
        return FeatureMap(spec, self.W[:M], None if self.q is None else self.q[:M])

    def limit_kernel(self, x, x2) -> float:
        return exact_kernel(self.spec.kind, self.spec.sigma, x, x2, scaled=self.spec.scaled)

    # ---- sidecar ------------------------------------------------------------

    def save(self, path) -> None:
        """Write parameters as text: one header line, the ``M`` rows of W,
        then the offsets (fourier only). Values round-trip exactly."""
        s = self.spec
        lines = [
            f"# kind={s.kind},M={s.M},D={s.D},sigma={s.sigma!r},seed={s.seed},scaled={int(s.scaled)}"
        ]
        lines += [",".join(repr(float(v)) for v in row) for row in self.W]
        if self.q is not None:
            lines.append(",".join(repr(float(v)) for v in self.q))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FeatureMap":
        text = Path(path).read_text(encoding="utf-8").splitlines()
        if not text or not text[0].startswith("# "):
            raise DataFormatError(f"{path}: missing feature-map header")
        fields = dict(kv.split("=", 1) for kv in text[0][2:].split(","))
        spec = FeatureMapSpec(
            kind=fields["kind"],
            M=int(fields["M"]),
            D=int(fields["D"]),
            sigma=float(fields["sigma"]),
            seed=int(fields["seed"]),
            scaled=bool(int(fields["scaled"])),
        )
        rows = [[float(v) for v in line.split(",")] for line in text[1:] if line]
        W = np.array(rows[: spec.M])
        q = np.array(rows[spec.M]) if spec.kind == "fourier-gaussian" else None
        return cls(spec, W, q)


def build(spec: FeatureMapSpec) -> FeatureMap:
    """Draw the frozen parameters for ``spec``; deterministic in the seed."""
    n_blocks = -(-spec.M // BLOCK)
    Ws, qs = [], []
    for k in range(n_blocks):
        rng = _rng.generator(spec.seed, _rng.FEATURES, k)
        W = rng.standard_normal((BLOCK, spec.D))
        if spec.kind == "fourier-gaussian":
            Ws.append(W / spec.sigma)
            qs.append(rng.uniform(0.0, 2.0 * math.pi, BLOCK))
        else:
            Ws.append(W)
    W = np.concatenate(Ws)[: spec.M]
    q = np.concatenate(qs)[: spec.M] if qs else None
    return FeatureMap(spec, W, q)


# --------------------------------------------------------------------------
# limit kernels
# --------------------------------------------------------------------------


def exact_kernel(kind: str, sigma: float, x, x2, scaled: bool = True) -> float:
    """``lim_{M -> inf} <phi_M(x), phi_M(x2)>`` for the given family."""
    x = np.asarray(x, dtype=np.float64).ravel()
    x2 = np.asarray(x2, dtype=np.float64).ravel()
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {x2.size}")
    return float(exact_gram(kind, sigma, x[None, :], x2[None, :], scaled=scaled)[0, 0])


def exact_gram(kind: str, sigma: float, X, Y=None, scaled: bool = True) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if kind == "fourier-gaussian":
        if not sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {sigma}")
        K = np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * sigma**2))
        return K if scaled else 0.5 * K
    if kind == "linear-sketch":
        return X @ Y.T
    if kind == "relu":
        # E[max(<w,x>,0) max(<w,y>,0)] for w ~ N(0, I): half the degree-1
        # arc-cosine kernel of Cho & Saul.
        nx = np.linalg.norm(X, axis=1)[:, None]
        ny = np.linalg.norm(Y, axis=1)[None, :]
        norms = nx * ny
        with np.errstate(invalid="ignore", divide="ignore"):
            cos = np.where(norms > 0, (X @ Y.T) / norms, 1.0)
        theta = np.arccos(np.clip(cos, -1.0, 1.0))
        return norms / (2.0 * math.pi) * (np.sin(theta) + (math.pi - theta) * np.cos(theta))
    raise ConfigError(f"unknown kernel kind {kind!r}; expected one of {KINDS}")
