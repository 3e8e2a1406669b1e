"""Coded batch smoothing: Chebyshev point sets and the encode/compute/decode module.

A batch of K samples is identified with values of a vector-valued natural
cubic spline at K fixed abscissas (first-kind Chebyshev points alpha). The
encoder evaluates that spline at N second-kind Chebyshev points beta to
produce N coded samples, each a fixed linear combination of the whole batch.
After the wrapped function runs on the coded batch, a second spline fitted
at beta is evaluated back at alpha, yielding estimates of the function's
values on the original samples.

Both stages are precomputed dense linear operators (cached per (K, N)), so a
round trip is two matrix products and is differentiable end to end; the
per-call tridiagonal route is kept available as ``encode_direct`` /
``decode_direct`` for O((N+K)*d) streaming use.
"""

import threading

import numpy as np

from . import autodiff
from .autodiff import Tensor
from .errors import ShapeError, ValidationError
from .spline import Knots, build_operator, fit_eval


class EncodingPoints:
    """First-kind Chebyshev abscissas, ascending, strictly inside (-1, 1)."""

    __slots__ = ("k", "alpha")

    def __init__(self, k: int, alpha: np.ndarray):
        self.k = k
        self.alpha = alpha


class DecodingPoints:
    """Second-kind Chebyshev abscissas, ascending, endpoints exactly -1 and 1."""

    __slots__ = ("n", "beta")

    def __init__(self, n: int, beta: np.ndarray):
        self.n = n
        self.beta = beta


def chebyshev_first(k: int, min_points: int = 4) -> EncodingPoints:
    """cos((2i-1)*pi/2K) for i=1..K, reversed into ascending order."""
    if k < min_points:
        raise ValidationError(f"need at least {min_points} encoding points, got {k}")
    i = np.arange(1, k + 1)
    alpha = np.cos((2 * i - 1) * np.pi / (2 * k))[::-1].copy()
    return EncodingPoints(k, alpha)


def chebyshev_second(n: int, min_points: int = 4) -> DecodingPoints:
    """cos((j-1)*pi/(N-1)) for j=1..N, ascending; endpoints assigned exactly."""
    if n < min_points:
        raise ValidationError(f"need at least {min_points} decoding points, got {n}")
    j = np.arange(1, n + 1)
    beta = np.cos((j - 1) * np.pi / (n - 1))[::-1].copy()
    beta[0] = -1.0
    beta[-1] = 1.0
    return DecodingPoints(n, beta)


class CodedSmoothingModule:
    """Precomputed encode/decode operators for a (K, N) batch geometry.

    ``identity_mode`` replaces beta with alpha (requires N == K), making both
    operators exact identities -- a plumbing check, not a useful setting.
    """

    def __init__(self, k: int, n: int, identity_mode: bool = False):
        if identity_mode and n != k:
            raise ValidationError("identity mode requires N == K")
        self.k = k
        self.n = n
        self.identity_mode = identity_mode
        self.alpha = chebyshev_first(k).alpha
        self.beta = self.alpha.copy() if identity_mode else chebyshev_second(n).beta
        self.enc_op = build_operator(Knots(self.alpha), self.beta)   # (K, N)
        self.dec_op = build_operator(Knots(self.beta), self.alpha)   # (N, K)

    def encode(self, x):
        """K input rows -> N coded rows; Tensor in, Tensor out (or ndarray)."""
        if isinstance(x, Tensor):
            if x.data.shape[0] != self.k:
                raise ShapeError(f"encode: expected {self.k} rows, got {x.data.shape[0]}")
            return autodiff.apply_linear_operator(self.enc_op, x)
        return self._apply(self.enc_op, np.asarray(x, dtype=np.float64), self.k)

    def decode(self, f_coded):
        """N computed rows -> K estimate rows."""
        if isinstance(f_coded, Tensor):
            if f_coded.data.shape[0] != self.n:
                raise ShapeError(f"decode: expected {self.n} rows, got {f_coded.data.shape[0]}")
            return autodiff.apply_linear_operator(self.dec_op, f_coded)
        return self._apply(self.dec_op, np.asarray(f_coded, dtype=np.float64), self.n)

    @staticmethod
    def _apply(op, arr, rows):
        if arr.ndim < 2 or arr.shape[0] != rows:
            raise ShapeError(f"expected {rows} rows, got shape {arr.shape}")
        if arr.ndim == 2:
            return op.matrix.T @ arr
        # arbitrary trailing shape: operators act on axis 0 only
        flat = op.matrix.T @ arr.reshape(arr.shape[0], -1)
        return flat.reshape((op.matrix.shape[1],) + arr.shape[1:])

    def forward(self, x, f):
        """decode(f(encode(x))): estimates of f on the original batch.

        ``f`` must map an N-row batch to an N-row batch. Gradients flow
        through f and both (constant) operators when x is a Tensor.
        """
        coded = self.encode(x)
        out = f(coded)
        rows = out.data.shape[0] if isinstance(out, Tensor) else np.asarray(out).shape[0]
        if rows != self.n:
            raise ShapeError(f"wrapped function returned {rows} rows, expected {self.n}")
        return self.decode(out)

    def encode_direct(self, x: np.ndarray) -> np.ndarray:
        """Per-call tridiagonal encode (no operator matrix); numpy only."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] != self.k:
            raise ShapeError(f"encode_direct: expected ({self.k}, d), got {x.shape}")
        return fit_eval(Knots(self.alpha), x, self.beta)

    def decode_direct(self, f_coded: np.ndarray) -> np.ndarray:
        x = np.asarray(f_coded, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] != self.n:
            raise ShapeError(f"decode_direct: expected ({self.n}, d), got {x.shape}")
        return fit_eval(Knots(self.beta), x, self.alpha)

    def estimate_mse(self, x: np.ndarray, f) -> float:
        """Mean squared estimate error vs f(x), over samples and coordinates."""
        x = np.asarray(x, dtype=np.float64)
        fhat = self.forward(x, f)
        diff = fhat - f(x)
        return float(np.mean(diff * diff))


_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def get_module(k: int, n: int, identity_mode: bool = False) -> CodedSmoothingModule:
    """Shared module cache; construction cost is paid once per (K, N)."""
    key = (k, n, identity_mode)
    mod = _CACHE.get(key)
    if mod is None:
        with _CACHE_LOCK:
            mod = _CACHE.get(key)
            if mod is None:
                mod = CodedSmoothingModule(k, n, identity_mode)
                _CACHE[key] = mod
    return mod
