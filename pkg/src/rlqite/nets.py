"""Small dense actor-critic network with hand-rolled gradients and Adam.

One shared ReLU body feeds two linear heads: per-slot Bernoulli policy
logits and a scalar state value. Parameter sets are plain lists of float64
arrays in a fixed layer order, so gradients and optimizer moments stay
congruent by construction.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, LoadError, NumericError

CHECKPOINT_MAGIC = b"RLQN"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden: tuple
    policy_dim: int
    value_dim: int = 1

    def __post_init__(self):
        dims = (self.input_dim, *self.hidden, self.policy_dim, self.value_dim)
        if any(d < 1 for d in dims):
            raise InvalidArgumentError("all layer dimensions must be >= 1")

    @property
    def num_arrays(self) -> int:
        # one (W, b) pair per hidden layer plus the two heads
        return 2 * (len(self.hidden) + 2)


@dataclass
class ParamSet:
    """Arrays in fixed order: body W,b per hidden layer, then policy head
    W,b, then value head W,b. Weights are (fan_in, fan_out)."""

    spec: MlpSpec
    arrays: list

    def __post_init__(self):
        if len(self.arrays) != self.spec.num_arrays:
            raise InvalidArgumentError(
                f"expected {self.spec.num_arrays} arrays, got {len(self.arrays)}"
            )

    @property
    def num_params(self) -> int:
        return sum(a.size for a in self.arrays)

    def copy(self) -> "ParamSet":
        return ParamSet(self.spec, [a.copy() for a in self.arrays])

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays)


def _layer_dims(spec: MlpSpec):
    """(fan_in, fan_out) per weight array, body layers then the two heads."""
    dims = []
    prev = spec.input_dim
    for h in spec.hidden:
        dims.append((prev, h))
        prev = h
    dims.append((prev, spec.policy_dim))
    dims.append((prev, spec.value_dim))
    return dims


def init_params(spec: MlpSpec, rng: np.random.Generator) -> ParamSet:
    """He-uniform weights (bound sqrt(6/fan_in)), zero biases; the policy
    head is scaled by 0.01 so the initial policy is near-uniform."""
    arrays = []
    dims = _layer_dims(spec)
    for i, (fan_in, fan_out) in enumerate(dims):
        bound = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        if i == len(dims) - 2:
            w *= 0.01
        arrays.append(w)
        arrays.append(np.zeros(fan_out))
    return ParamSet(spec, arrays)


def _split(params: ParamSet):
    body = []
    n_hidden = len(params.spec.hidden)
    for i in range(n_hidden):
        body.append((params.arrays[2 * i], params.arrays[2 * i + 1]))
    wp, bp = params.arrays[2 * n_hidden], params.arrays[2 * n_hidden + 1]
    wv, bv = params.arrays[2 * n_hidden + 2], params.arrays[2 * n_hidden + 3]
    return body, (wp, bp), (wv, bv)


def _forward_cached(params: ParamSet, x: np.ndarray):
    body, (wp, bp), (wv, bv) = _split(params)
    acts = [x]
    h = x
    for w, b in body:
        h = np.maximum(h @ w + b, 0.0)
        acts.append(h)
    logits = h @ wp + bp
    values = (h @ wv + bv)[:, 0]
    return logits, values, acts


def forward(params: ParamSet, obs: np.ndarray):
    """Policy logits and state value; accepts one observation or a batch."""
    x = np.asarray(obs, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.spec.input_dim:
        raise InvalidArgumentError(
            f"observation width {x.shape[-1]} != input_dim {params.spec.input_dim}"
        )
    logits, values, _ = _forward_cached(params, x)
    if single:
        return logits[0], float(values[0])
    return logits, values


def backward(params: ParamSet, obs: np.ndarray, dlogits: np.ndarray, dvalue) -> ParamSet:
    """Exact reverse-mode gradients of (dlogits . logits + dvalue . value)
    with respect to every parameter, summed over the batch."""
    x = np.asarray(obs, dtype=float)
    gl = np.asarray(dlogits, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
        gl = gl[None, :]
    gv = np.atleast_1d(np.asarray(dvalue, dtype=float))
    if x.shape[1] != params.spec.input_dim:
        raise InvalidArgumentError("observation width does not match the net")
    if gl.shape != (x.shape[0], params.spec.policy_dim) or gv.shape != (x.shape[0],):
        raise InvalidArgumentError("upstream gradient shapes do not match the net")

    body, (wp, _), (wv, _) = _split(params)
    _, _, acts = _forward_cached(params, x)
    h_last = acts[-1]

    g_wp = h_last.T @ gl
    g_bp = gl.sum(axis=0)
    g_wv = h_last.T @ gv[:, None]
    g_bv = np.array([gv.sum()])

    dh = gl @ wp.T + gv[:, None] @ wv.T
    grads_body = [None] * len(body)
    for i in range(len(body) - 1, -1, -1):
        w, _ = body[i]
        dpre = dh * (acts[i + 1] > 0)
        grads_body[i] = (acts[i].T @ dpre, dpre.sum(axis=0))
        dh = dpre @ w.T

    arrays = []
    for gw, gb in grads_body:
        arrays.extend((gw, gb))
    arrays.extend((g_wp, g_bp, g_wv, g_bv))
    return ParamSet(params.spec, arrays)


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: ParamSet, learning_rate: float = 3e-4) -> AdamState:
    return AdamState(
        m=[np.zeros_like(a) for a in params.arrays],
        v=[np.zeros_like(a) for a in params.arrays],
        learning_rate=learning_rate,
    )


def adam_step(params: ParamSet, grads: ParamSet, state: AdamState):
    """One bias-corrected Adam update; returns fresh (params, state).

    Non-finite gradients abort the update with the state untouched.
    """
    if len(grads.arrays) != len(params.arrays):
        raise InvalidArgumentError("gradient set not congruent with parameters")
    for g, p in zip(grads.arrays, params.arrays):
        if g.shape != p.shape:
            raise InvalidArgumentError("gradient shapes not congruent with parameters")
    if not grads.all_finite():
        raise NumericError("non-finite gradient; update aborted")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_arrays, new_m, new_v = [], [], []
    for p, g, m, v in zip(params.arrays, grads.arrays, state.m, state.v):
        m2 = b1 * m + (1 - b1) * g
        v2 = b2 * v + (1 - b2) * g * g
        mhat = m2 / (1 - b1**t)
        vhat = v2 / (1 - b2**t)
        new_arrays.append(p - state.learning_rate * mhat / (np.sqrt(vhat) + state.eps))
        new_m.append(m2)
        new_v.append(v2)
    new_state = AdamState(
        new_m, new_v, t, state.learning_rate, b1, b2, state.eps
    )
    return ParamSet(params.spec, new_arrays), new_state


def save_checkpoint(path, params: ParamSet, adam: AdamState | None = None):
    """Binary layout: magic, u32 version, u64 header length, JSON header,
    then every array as little-endian float64 in layer order (parameters,
    then Adam first and second moments when present)."""
    header = {
        "spec": {
            "input_dim": params.spec.input_dim,
            "hidden": list(params.spec.hidden),
            "policy_dim": params.spec.policy_dim,
            "value_dim": params.spec.value_dim,
        },
        "shapes": [list(a.shape) for a in params.arrays],
        "adam": None
        if adam is None
        else {
            "t": adam.t,
            "learning_rate": adam.learning_rate,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "eps": adam.eps,
        },
    }
    blob = json.dumps(header).encode()
    chunks = [CHECKPOINT_MAGIC, struct.pack("<I", CHECKPOINT_VERSION)]
    chunks.append(struct.pack("<Q", len(blob)))
    chunks.append(blob)
    arrays = list(params.arrays)
    if adam is not None:
        arrays.extend(adam.m)
        arrays.extend(adam.v)
    for a in arrays:
        chunks.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_checkpoint(path):
    """Inverse of save_checkpoint; returns (params, adam or None)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise LoadError(f"cannot read checkpoint {path!r}: {exc}") from None
    if len(raw) < 16 or raw[:4] != CHECKPOINT_MAGIC:
        raise LoadError("not a checkpoint file (bad magic)")
    version = struct.unpack_from("<I", raw, 4)[0]
    if version != CHECKPOINT_VERSION:
        raise LoadError(
            f"checkpoint version {version} not supported (expected {CHECKPOINT_VERSION})"
        )
    hlen = struct.unpack_from("<Q", raw, 8)[0]
    if 16 + hlen > len(raw):
        raise LoadError("truncated checkpoint (header)")
    try:
        header = json.loads(raw[16 : 16 + hlen].decode())
        spec = MlpSpec(
            header["spec"]["input_dim"],
            tuple(header["spec"]["hidden"]),
            header["spec"]["policy_dim"],
            header["spec"]["value_dim"],
        )
        shapes = [tuple(s) for s in header["shapes"]]
    except (KeyError, ValueError, TypeError) as exc:
        raise LoadError(f"corrupt checkpoint header: {exc}") from None
    copies = 1 if header["adam"] is None else 3
    need = sum(int(np.prod(s)) for s in shapes) * 8 * copies
    body = raw[16 + hlen :]
    if len(body) != need:
        raise LoadError(
            f"truncated checkpoint (payload {len(body)} bytes, expected {need})"
        )
    offset = 0

    def take():
        nonlocal offset
        out = []
        for s in shapes:
            count = int(np.prod(s))
            arr = np.frombuffer(body, dtype="<f8", count=count, offset=offset)
            out.append(arr.reshape(s).astype(float))
            offset += count * 8
        return out

    params = ParamSet(spec, take())
    adam = None
    if header["adam"] is not None:
        meta = header["adam"]
        adam = AdamState(
            take(),
            take(),
            int(meta["t"]),
            float(meta["learning_rate"]),
            float(meta["beta1"]),
            float(meta["beta2"]),
            float(meta["eps"]),
        )
    return params, adam
