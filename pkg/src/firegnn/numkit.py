"""Dense float64 kernels, deterministic RNG, Adam, and a finite-difference checker.

Dense matrices are plain C-order float64 numpy arrays. Every function here is
pure: inputs are never mutated, outputs are fresh arrays. The only stateful
object is Rng, and callers own that state explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, ValidationError

Params = dict[str, np.ndarray]

_MASK64 = (1 << 64) - 1


class Rng:
    """SplitMix64 counter-based generator.

    State transition (all arithmetic mod 2^64):
        state += 0x9E3779B97F4A7C15
        z = state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        output = z ^ (z >> 31)

    Derived draws are fixed conventions on top of the u64 stream:
        uniform():  ((u64 >> 11) + 0.5) * 2^-53, in (0, 1)
        normal():   sqrt(-2 ln u1) * cos(2 pi u2), one normal per two uniforms
        randint(n): u64 % n
    Arrays fill in row-major order. Identical seeds give identical streams on
    every platform.
    """

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def uniform(self) -> float:
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53

    def normal(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def randint(self, n: int) -> int:
        """Integer in [0, n)."""
        if n <= 0:
            raise ValidationError(f"randint requires n >= 1, got {n}")
        return self.next_u64() % n

    def uniform_array(self, shape) -> np.ndarray:
        out = np.empty(int(np.prod(shape)), dtype=np.float64)
        for i in range(out.size):
            out[i] = self.uniform()
        return out.reshape(shape)

    def normal_array(self, shape) -> np.ndarray:
        out = np.empty(int(np.prod(shape)), dtype=np.float64)
        for i in range(out.size):
            out[i] = self.normal()
        return out.reshape(shape)

    def permutation(self, x) -> np.ndarray:
        """Fisher-Yates shuffle of a copy; x may be an int (permutes arange)."""
        arr = np.arange(x) if isinstance(x, int) else np.array(x)
        for i in range(len(arr) - 1, 0, -1):
            j = self.randint(i + 1)
            arr[i], arr[j] = arr[j], arr[i]
        return arr


def derive_seeds(seed: int, n: int) -> list[int]:
    """First n outputs of Rng(seed), for carving independent substreams."""
    rng = Rng(seed)
    return [rng.next_u64() for _ in range(n)]


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """c[i,j] = sum_k a[i,k] b[k,j]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    return a @ b


def sigmoid(x):
    """Stable logistic 1/(1+exp(-x)), elementwise; saturates instead of overflowing."""
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out[0]) if scalar else out


def softplus(x):
    """ln(1+exp(x)) via logaddexp; derivative is sigmoid(x)."""
    return np.logaddexp(0.0, np.asarray(x, dtype=np.float64))


def softmax_row(logits) -> np.ndarray:
    """Probability vector from a 1-d logit vector, max-subtracted for stability."""
    v = np.asarray(logits, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError(f"softmax_row expects a non-empty vector, got shape {v.shape}")
    e = np.exp(v - v.max())
    return e / e.sum()


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax of an n x C matrix."""
    m = np.asarray(logits, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] == 0:
        raise ValidationError(f"softmax_rows expects an n x C matrix, got shape {m.shape}")
    e = np.exp(m - m.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probabilities: np.ndarray, labels: np.ndarray, mask) -> float:
    """Mean of -log p[label] over the masked rows; p clamped at 1e-12.

    probabilities: n x C, rows summing to 1; labels: n ints in [0, C);
    mask: index array selecting the rows that contribute.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    y = np.asarray(labels)
    idx = np.asarray(mask, dtype=np.int64)
    if idx.size == 0:
        raise ValidationError("cross_entropy: empty mask")
    if p.ndim != 2 or y.shape[0] != p.shape[0]:
        raise ShapeError(f"cross_entropy: probabilities {p.shape} vs labels {y.shape}")
    rows = p[idx]
    if np.any(np.abs(rows.sum(axis=1) - 1.0) > 1e-9):
        raise ValidationError("cross_entropy: masked rows must sum to 1")
    if np.any((y[idx] < 0) | (y[idx] >= p.shape[1])):
        raise ValidationError("cross_entropy: label out of range")
    picked = np.maximum(rows[np.arange(idx.size), y[idx]], 1e-12)
    return float(-np.mean(np.log(picked)))


@dataclass
class AdamState:
    """Per-parameter moments for Adam; t increases by one per step."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    @classmethod
    def init(cls, params: Params, lr: float) -> "AdamState":
        state = cls(lr=lr)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state


def adam_step(params: Params, grads: Params, state: AdamState) -> tuple[Params, AdamState]:
    """One Adam update with bias correction. Inputs are left untouched."""
    t = state.t + 1
    new = AdamState(lr=state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps, t=t)
    out: Params = {}
    b1, b2 = state.beta1, state.beta2
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.shape:
            raise ShapeError(f"adam_step: gradient shape {g.shape} != parameter shape {p.shape} for '{k}'")
        m = b1 * state.m[k] + (1.0 - b1) * g
        v = b2 * state.v[k] + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        out[k] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new.m[k] = m
        new.v[k] = v
    return out, new


def finite_diff_grad(loss_fn, params: Params, h: float = 1e-5) -> Params:
    """Central-difference gradient estimate, one coordinate at a time.

    loss_fn maps a params dict to a scalar and must be deterministic.
    """
    if not (1e-7 <= h <= 1e-3):
        raise ValidationError(f"finite_diff_grad: h={h} outside [1e-7, 1e-3]")
    grads: Params = {}
    work = {k: p.copy() for k, p in params.items()}
    for k, p in work.items():
        g = np.zeros_like(p)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = loss_fn(work)
            flat[i] = orig - h
            f_minus = loss_fn(work)
            flat[i] = orig
            if not (math.isfinite(f_plus) and math.isfinite(f_minus)):
                raise ValidationError(f"finite_diff_grad: non-finite loss at '{k}'[{i}]")
            gflat[i] = (f_plus - f_minus) / (2.0 * h)
        grads[k] = g
    return grads
