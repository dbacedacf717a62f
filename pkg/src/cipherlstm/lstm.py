"""Single-layer LSTM with a softmax output head, trained on an L2 loss.

Shapes: ``W`` is (4n, d+n) acting on ``[x_t ; h_{t-1}]`` with gate blocks
ordered (i, f, o, g); ``V`` is (27, n). Batched arrays are (B, T, .);
internal caches are time-major.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from . import rng

OUT = 27


@dataclass
class ModelParams:
    W: np.ndarray
    b_gate: np.ndarray
    V: np.ndarray
    b_out: np.ndarray

    @property
    def n(self) -> int:
        return self.V.shape[1]

    @property
    def d(self) -> int:
        return self.W.shape[1] - self.n

    @property
    def dtype(self):
        return self.W.dtype

    def tensors(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def apply(self, fn) -> "ModelParams":
        return ModelParams(*(fn(t) for t in self.tensors().values()))

    def zeros_like(self) -> "ModelParams":
        return self.apply(np.zeros_like)

    def astype(self, dtype) -> "ModelParams":
        return self.apply(lambda t: t.astype(dtype))

    def copy(self) -> "ModelParams":
        return self.apply(np.copy)

    def validate(self) -> None:
        n, d = self.n, self.d
        want = {"W": (4 * n, d + n), "b_gate": (4 * n,), "V": (OUT, n), "b_out": (OUT,)}
        for name, t in self.tensors().items():
            if t.shape != want[name]:
                raise ValueError(f"{name} has shape {t.shape}, expected {want[name]}")
            if not np.all(np.isfinite(t)):
                raise ValueError(f"{name} contains non-finite values")


# gradients share the parameter layout
Gradients = ModelParams


class ModelState(NamedTuple):
    h: np.ndarray
    c: np.ndarray


class GateActivations(NamedTuple):
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray


@dataclass
class AdamState:
    m: ModelParams
    v: ModelParams
    t: int = 0

    @classmethod
    def zeros(cls, params: ModelParams) -> "AdamState":
        return cls(params.zeros_like(), params.zeros_like(), 0)


def xavier_init(n: int, d: int, seed: int = 0, dtype=np.float32) -> ModelParams:
    """Glorot-uniform weights; zero biases except the forget gate (1.0)."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    stream = rng.Stream(seed, 0, rng.INIT)

    def uniform(rows, cols):
        limit = np.sqrt(6.0 / (rows + cols))
        u = stream.uniform(rows * cols).reshape(rows, cols)
        return ((2.0 * u - 1.0) * limit).astype(dtype)

    W = uniform(4 * n, d + n)
    V = uniform(OUT, n)
    b_gate = np.zeros(4 * n, dtype=dtype)
    b_gate[n : 2 * n] = 1.0
    return ModelParams(W, b_gate, V, np.zeros(OUT, dtype=dtype))


def zero_state(params: ModelParams, batch: int | None = None) -> ModelState:
    shape = (params.n,) if batch is None else (batch, params.n)
    return ModelState(np.zeros(shape, params.dtype), np.zeros(shape, params.dtype))


def sigmoid(z):
    # tanh form: overflow-free and much faster than exp-based variants
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _cell(z, c_prev, n):
    s = sigmoid(z[..., : 3 * n])
    i, f, o = s[..., :n], s[..., n : 2 * n], s[..., 2 * n :]
    g = np.tanh(z[..., 3 * n :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    return i, f, o, g, c, tc, o * tc


def lstm_step(params: ModelParams, x_t, state: ModelState) -> tuple[ModelState, GateActivations]:
    x_t = np.asarray(x_t, dtype=params.dtype)
    if not np.all(np.isfinite(x_t)):
        raise ValueError("non-finite input")
    z = np.concatenate([x_t, state.h], axis=-1) @ params.W.T + params.b_gate
    i, f, o, g, c, _, h = _cell(z, state.c, params.n)
    return ModelState(h, c), GateActivations(i, f, o, g)


def softmax(logits):
    e = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class Cache:
    params: ModelParams
    X: np.ndarray  # (T, B, d)
    H: np.ndarray  # (T+1, B, n), H[0] is the initial state
    C: np.ndarray  # (T+1, B, n)
    I: np.ndarray  # (T, B, n)
    F: np.ndarray
    O: np.ndarray
    G: np.ndarray
    TC: np.ndarray  # tanh(C[1:])
    P: np.ndarray  # (B, T, 27)
    squeeze: bool


def forward(params: ModelParams, X) -> tuple[np.ndarray, Cache]:
    """Softmax outputs for a (T, d) sequence or a (B, T, d) batch, from a zero state."""
    X = np.asarray(X, dtype=params.dtype)
    squeeze = X.ndim == 2
    if squeeze:
        X = X[None]
    B, T, d = X.shape
    if d != params.d:
        raise ValueError(f"input width {d} does not match model input width {params.d}")
    n = params.n
    Xt = np.ascontiguousarray(X.transpose(1, 0, 2))
    Wx, Wh = params.W[:, :d], params.W[:, d:]
    ZX = Xt @ Wx.T + params.b_gate
    H = np.zeros((T + 1, B, n), params.dtype)
    C = np.zeros((T + 1, B, n), params.dtype)
    I, F, O, G, TC = (np.empty((T, B, n), params.dtype) for _ in range(5))
    WhT = np.ascontiguousarray(Wh.T)
    for t in range(T):
        z = ZX[t] + H[t] @ WhT
        I[t], F[t], O[t], G[t], C[t + 1], TC[t], H[t + 1] = _cell(z, C[t], n)
    logits = H[1:] @ params.V.T + params.b_out
    P = softmax(logits).transpose(1, 0, 2)
    cache = Cache(params, Xt, H, C, I, F, O, G, TC, P, squeeze)
    return (P[0] if squeeze else P), cache


def l2_loss(P, Y) -> float:
    """Squared distance between softmax rows and one-hot rows, averaged over rows."""
    P, Y = np.asarray(P), np.asarray(Y)
    if P.shape != Y.shape:
        raise ValueError(f"shape mismatch: {P.shape} vs {Y.shape}")
    return float(np.mean(np.sum((P - Y) ** 2, axis=-1)))


def backward(params: ModelParams, cache: Cache, Y) -> Gradients:
    """Exact gradient of ``l2_loss(forward(params, X), Y)`` by BPTT."""
    if cache.params is not params:
        raise ValueError("cache was produced by a different parameter set")
    Y = np.asarray(Y, dtype=params.dtype)
    if cache.squeeze:
        Y = Y[None]
    P = cache.P
    if Y.shape != P.shape:
        raise ValueError(f"target shape {Y.shape} does not match output shape {P.shape}")
    B, T, _ = P.shape
    n, d = params.n, params.d

    # dL/dP then through the softmax Jacobian: dlogit = P * (gP - <P, gP>)
    gP = (2.0 / (B * T)) * (P - Y)
    dlogit = P * (gP - np.sum(P * gP, axis=-1, keepdims=True))
    dlogit = np.ascontiguousarray(dlogit.transpose(1, 0, 2))  # (T, B, 27)
    H1 = cache.H[1:]
    dV = dlogit.reshape(-1, OUT).T @ H1.reshape(-1, n)
    db_out = dlogit.sum(axis=(0, 1))
    dH = dlogit @ params.V  # (T, B, n)

    # local derivatives that do not depend on the recursion, for all t at once
    I, F, O, G, TC = cache.I, cache.F, cache.O, cache.G, cache.TC
    A = np.concatenate(
        [G * I * (1.0 - I), cache.C[:-1] * F * (1.0 - F), TC * O * (1.0 - O), I * (1.0 - G * G)], axis=-1
    )
    dc_from_h = O * (1.0 - TC * TC)

    Wh = np.ascontiguousarray(params.W[:, d:])
    dZ = np.empty((T, B, 4 * n), params.dtype)
    dh_next = np.zeros((B, n), params.dtype)
    dc_next = np.zeros((B, n), params.dtype)
    for t in range(T - 1, -1, -1):
        dh = dH[t] + dh_next
        dc = dc_next + dh * dc_from_h[t]
        dz = dZ[t]
        dz[:, :n] = dc
        dz[:, n : 2 * n] = dc
        dz[:, 2 * n : 3 * n] = dh
        dz[:, 3 * n :] = dc
        dz *= A[t]
        dc_next = dc * F[t]
        dh_next = dz @ Wh

    dZf = dZ.reshape(-1, 4 * n)
    dW = np.empty_like(params.W)
    dW[:, :d] = dZf.T @ cache.X.reshape(-1, d)
    dW[:, d:] = dZf.T @ cache.H[:-1].reshape(-1, n)
    return Gradients(dW, dZf.sum(axis=0), dV, db_out)


def grad_norm(grads: Gradients) -> float:
    return float(np.sqrt(sum(np.sum(t.astype(np.float64) ** 2) for t in grads.tensors().values())))


def clip_gradients(grads: Gradients, max_norm: float) -> tuple[Gradients, bool]:
    norm = grad_norm(grads)
    if norm <= max_norm:
        return grads, False
    scale = max_norm / norm
    return grads.apply(lambda g: g * g.dtype.type(scale)), True


def adam_step(params: ModelParams, grads: Gradients, state: AdamState, lr: float = 5e-4,
              betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8) -> tuple[ModelParams, AdamState]:
    b1, b2 = betas
    t = state.t + 1
    step = lr / (1.0 - b1**t)
    bc2 = 1.0 - b2**t
    new_p, new_m, new_v = {}, {}, {}
    for name, p in params.tensors().items():
        g = getattr(grads, name)
        m = b1 * getattr(state.m, name) + (1.0 - b1) * g
        v = b2 * getattr(state.v, name) + (1.0 - b2) * (g * g)
        new_p[name] = p - step * m / (np.sqrt(v / bc2) + eps)
        new_m[name], new_v[name] = m, v
    return ModelParams(**new_p), AdamState(ModelParams(**new_m), ModelParams(**new_v), t)


REGIONS = ("message", "all", "key")


def region_slice(region: str, key_slots: int = 6) -> slice:
    if region == "message":
        return slice(key_slots, None)
    if region == "key":
        return slice(0, key_slots)
    if region == "all":
        return slice(None)
    raise ValueError(f"unknown region {region!r}; choose from {REGIONS}")


def accuracy(P, Y, region: str = "all", key_slots: int = 6) -> float:
    """Fraction of time steps in ``region`` whose argmax matches the target."""
    P, Y = np.asarray(P), np.asarray(Y)
    if P.shape != Y.shape:
        raise ValueError(f"shape mismatch: {P.shape} vs {Y.shape}")
    sl = region_slice(region, key_slots)
    hit = np.argmax(P, axis=-1) == np.argmax(Y, axis=-1)
    hit = hit[..., sl]
    if hit.size == 0:
        raise ValueError(f"region {region!r} is empty for sequences of length {P.shape[-2]}")
    return float(hit.mean())


def numerical_gradients(params: ModelParams, X, Y, h: float = 1e-5) -> Gradients:
    """Central finite differences of the L2 loss; slow, for checking only."""
    out = params.zeros_like()
    for name, t in params.tensors().items():
        gt = getattr(out, name)
        flat, gflat = t.reshape(-1), gt.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            lp = l2_loss(forward(params, X)[0], Y)
            flat[k] = orig - h
            lm = l2_loss(forward(params, X)[0], Y)
            flat[k] = orig
            gflat[k] = (lp - lm) / (2 * h)
    return out


def relative_errors(analytic: Gradients, numeric: Gradients, floor: float = 1e-6) -> dict[str, float]:
    """Max elementwise |a - n| / max(|a| + |n|, floor) per tensor.

    Central differences at h=1e-5 carry ~2e-11 absolute roundoff; the floor
    keeps entries that are zero to that resolution from dominating.
    """
    out = {}
    for name, a in analytic.tensors().items():
        nm = getattr(numeric, name)
        out[name] = float(np.max(np.abs(a - nm) / np.maximum(np.abs(a) + np.abs(nm), floor)))
    return out


def random_instance(n: int, T: int, d: int, seed: int, batch: int = 1):
    """Float64 params plus a random one-hot (or two-hot for d=54) input/target pair."""
    params = xavier_init(n, d, seed=seed, dtype=np.float64)
    stream = rng.Stream(seed, 1, rng.INIT)
    # biases get random values too so their gradients are exercised
    params.b_gate[:] = stream.uniform(4 * n) - 0.5
    params.b_out[:] = stream.uniform(OUT) - 0.5
    params.V *= 3.0
    X = np.zeros((batch, T, d))
    for block in range(d // OUT):
        idx = stream.below(OUT, batch * T).reshape(batch, T).astype(int)
        np.put_along_axis(X[..., block * OUT : (block + 1) * OUT], idx[..., None], 1.0, axis=-1)
    Y = np.zeros((batch, T, OUT))
    idx = stream.below(OUT, batch * T).reshape(batch, T).astype(int)
    np.put_along_axis(Y, idx[..., None], 1.0, axis=-1)
    return params, X, Y


def gradcheck(n: int = 8, T: int = 5, d: int = 27, trials: int = 5, seed: int = 0,
              perturb: float = 0.0, h: float = 1e-5) -> list[dict[str, float]]:
    """Relative errors per tensor for ``trials`` random float64 instances.

    ``perturb`` adds a constant to the analytic W gradient (negative control).
    """
    results = []
    for trial in range(trials):
        params, X, Y = random_instance(n, T, d, seed + trial)
        _, cache = forward(params, X)
        analytic = backward(params, cache, Y)
        if perturb:
            analytic.W += perturb
        results.append(relative_errors(analytic, numerical_gradients(params, X, Y, h)))
    return results
