"""
AI-driven development file
Purpose: Recurrent stochastic policy over gateway-message histories with analytic gradients
Module: UAV_LoRa_SAR_Lab/policy.py
Dependencies: numpy, world
"""

import logging
import struct
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from world import Action, GatewayMessage, SearchEnvironment, Step, Trajectory

logger = logging.getLogger(__name__)

N_ACTIONS = len(Action)
# Per-step features before the latent code: normalized rssi, normalized snr, one-hot action.
BASE_FEATURES = 2 + N_ACTIONS
RSSI_OFFSET_DBM = 120.0
RSSI_SCALE_DB = 60.0
SNR_SCALE_DB = 30.0
INIT_SCALE = 0.08
CHECKPOINT_VERSION = 1

# Raw (rssi, snr, action) row used to pad short histories; it normalizes to zeros.
PAD_ROW = (-RSSI_OFFSET_DBM, 0.0, float(Action.H))


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class HistoryWindow:
    """
    The last `size` (rssi, snr, action) entries, oldest first.

    Entry t pairs the message received at slot t with the action that moved the
    UAV there; the reset observation carries action H.
    """

    size: int
    entries: Tuple[Tuple[float, float, int], ...] = ()

    def __post_init__(self) -> None:
        if len(self.entries) > self.size:
            raise ValueError(f"History holds {len(self.entries)} entries, window size is {self.size}")

    @classmethod
    def start(cls, size: int, message: GatewayMessage) -> "HistoryWindow":
        return cls(size).advance(message, Action.H)

    def advance(self, message: GatewayMessage, action: Action) -> "HistoryWindow":
        entry = (float(message.rssi_dbm), float(message.snr_db), int(action))
        return HistoryWindow(self.size, (self.entries + (entry,))[-self.size:])

    def raw(self) -> np.ndarray:
        """(size, 3) array of raw entries, left-padded with PAD_ROW."""
        rows = [PAD_ROW] * (self.size - len(self.entries)) + list(self.entries)
        return np.asarray(rows, dtype=np.float64).reshape(self.size, 3)


def featurize(raw: np.ndarray, z: np.ndarray) -> np.ndarray:
    """
    Turn raw (rssi, snr, action) rows into network input features.

    Args:
        raw: Array of shape (..., 3)
        z: Latent context of shape (latent,), appended to every row

    Returns:
        Array of shape (..., 7 + latent)
    """
    lead = raw.shape[:-1]
    out = np.zeros(lead + (BASE_FEATURES + z.shape[0],), dtype=np.float64)
    out[..., 0] = (raw[..., 0] + RSSI_OFFSET_DBM) / RSSI_SCALE_DB
    out[..., 1] = raw[..., 1] / SNR_SCALE_DB
    actions = raw[..., 2].astype(np.int64)
    np.put_along_axis(out[..., 2:BASE_FEATURES], actions[..., None], 1.0, axis=-1)
    out[..., BASE_FEATURES:] = z
    return out


@dataclass(frozen=True)
class PolicyArch:
    """Architecture descriptor: window length, layer widths and action count."""

    window: int = 8
    hidden: int = 32
    dense: int = 32
    latent: int = 16
    actions: int = N_ACTIONS

    def __post_init__(self) -> None:
        for name in ("window", "hidden", "dense"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.latent < 0:
            raise ValueError(f"latent must be >= 0, got {self.latent}")
        if self.actions != N_ACTIONS:
            raise ValueError(f"actions must be {N_ACTIONS}, got {self.actions}")

    @property
    def inputs(self) -> int:
        return BASE_FEATURES + self.latent

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        n, m = self.hidden, self.dense
        return {
            "Wx": (4 * n, self.inputs),
            "Wh": (4 * n, n),
            "b": (4 * n,),
            "W1": (m, n),
            "b1": (m,),
            "W2": (self.actions, m),
            "b2": (self.actions,),
        }

    @property
    def size(self) -> int:
        return int(sum(np.prod(s) for s in self.shapes().values()))


def unpack(vector: np.ndarray, shapes: Dict[str, Tuple[int, ...]]) -> Dict[str, np.ndarray]:
    """Slice a flat parameter vector into named reshaped views."""
    views, offset = {}, 0
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        views[name] = vector[offset:offset + count].reshape(shape)
        offset += count
    return views


@dataclass(frozen=True, eq=False)
class PolicyParams:
    """Immutable flat parameter vector theta (or phi) plus its architecture."""

    arch: PolicyArch
    vector: np.ndarray

    def __post_init__(self) -> None:
        vector = np.array(self.vector, dtype=np.float64)
        if vector.shape != (self.arch.size,):
            raise ValueError(f"Parameter vector has shape {vector.shape}, expected ({self.arch.size},)")
        vector.setflags(write=False)
        object.__setattr__(self, "vector", vector)

    @classmethod
    def initialize(cls, arch: PolicyArch, seed: int) -> "PolicyParams":
        """Uniform init in [-0.08, 0.08] with forget-gate bias +1."""
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7E7A]))
        vector = rng.uniform(-INIT_SCALE, INIT_SCALE, arch.size)
        views = unpack(vector, arch.shapes())
        views["b"][arch.hidden:2 * arch.hidden] += 1.0
        return cls(arch, vector)

    @classmethod
    def zeros(cls, arch: PolicyArch) -> "PolicyParams":
        return cls(arch, np.zeros(arch.size))

    def views(self) -> Dict[str, np.ndarray]:
        return unpack(self.vector, self.arch.shapes())

    def with_vector(self, vector: np.ndarray) -> "PolicyParams":
        return PolicyParams(self.arch, vector)

    def null_context(self) -> np.ndarray:
        return np.zeros(self.arch.latent)

    def to_bytes(self) -> bytes:
        a = self.arch
        header = struct.pack("<B5I", CHECKPOINT_VERSION, a.window, a.hidden, a.dense, a.latent, a.actions)
        return header + self.vector.astype("<f8").tobytes()

    @classmethod
    def from_buffer(cls, data: bytes, offset: int = 0) -> Tuple["PolicyParams", int]:
        """Parse an architecture block and vector; returns the params and the end offset."""
        window, hidden, dense, latent, actions = struct.unpack_from("<5I", data, offset)
        arch = PolicyArch(window, hidden, dense, latent, actions)
        start = offset + struct.calcsize("<5I")
        end = start + 8 * arch.size
        if len(data) < end:
            raise ValueError(f"Checkpoint truncated: need {end} bytes, got {len(data)}")
        vector = np.frombuffer(data[start:end], dtype="<f8").astype(np.float64)
        return cls(arch, vector), end

    @classmethod
    def from_bytes(cls, data: bytes) -> "PolicyParams":
        if not data or data[0] != CHECKPOINT_VERSION:
            raise ValueError(f"Unsupported policy checkpoint version {data[:1]!r}")
        params, end = cls.from_buffer(data, 1)
        if end != len(data):
            raise ValueError(f"Checkpoint has {len(data) - end} trailing bytes")
        return params


def lstm_forward(
    Wx: np.ndarray, Wh: np.ndarray, b: np.ndarray, x: np.ndarray
) -> Tuple[np.ndarray, List[Tuple[np.ndarray, ...]]]:
    """
    Run an LSTM over a batch of sequences with gate order (input, forget, cell, output).

    Args:
        x: Inputs of shape (batch, steps, features)

    Returns:
        (final hidden state (batch, hidden), per-step cache for lstm_backward)
    """
    batch, steps, _ = x.shape
    n = Wh.shape[1]
    h = np.zeros((batch, n))
    c = np.zeros((batch, n))
    cache = []
    for t in range(steps):
        a = x[:, t] @ Wx.T + h @ Wh.T + b
        i = sigmoid(a[:, :n])
        f = sigmoid(a[:, n:2 * n])
        g = np.tanh(a[:, 2 * n:3 * n])
        o = sigmoid(a[:, 3 * n:])
        c_next = f * c + i * g
        tanh_c = np.tanh(c_next)
        cache.append((h, c, i, f, g, o, tanh_c))
        h, c = o * tanh_c, c_next
    return h, cache


def lstm_backward(
    Wx: np.ndarray, Wh: np.ndarray, x: np.ndarray, cache: List[Tuple[np.ndarray, ...]], dh: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Back-propagate a gradient on the final hidden state through time.

    Returns:
        (dWx, dWh, db, dx) with dx shaped like x
    """
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(Wx.shape[0])
    dx = np.zeros_like(x)
    dc = np.zeros_like(dh)
    for t in reversed(range(len(cache))):
        h_prev, c_prev, i, f, g, o, tanh_c = cache[t]
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c ** 2)
        da = np.concatenate(
            [
                dc * g * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - g ** 2),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        dWx += da.T @ x[:, t]
        dWh += da.T @ h_prev
        db += da.sum(axis=0)
        dx[:, t] = da @ Wx
        dh = da @ Wh
        dc = dc * f
    return dWx, dWh, db, dx


def _check_features(params: PolicyParams, feats: np.ndarray) -> None:
    a = params.arch
    if feats.ndim != 3 or feats.shape[1] != a.window or feats.shape[2] != a.inputs:
        raise ValueError(
            f"Features of shape {feats.shape} do not match (batch, {a.window}, {a.inputs})"
        )


def forward_batch(params: PolicyParams, feats: np.ndarray) -> Tuple[np.ndarray, tuple]:
    """
    Action probabilities for a batch of featurized history windows.

    Args:
        params: Policy parameters
        feats: Array of shape (batch, window, inputs)

    Returns:
        (probabilities (batch, actions), cache for score_gradient)
    """
    _check_features(params, feats)
    v = params.views()
    h, lstm_cache = lstm_forward(v["Wx"], v["Wh"], v["b"], feats)
    s = sigmoid(h @ v["W1"].T + v["b1"])
    logits = s @ v["W2"].T + v["b2"]
    logits = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(logits)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs, (feats, h, s, probs, lstm_cache)


def score_gradient(
    params: PolicyParams, cache: tuple, actions: np.ndarray, weights: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradient of sum_r weights[r] * log pi(actions[r] | window r).

    Args:
        params: Parameters used for the forward pass that produced `cache`
        cache: Second return value of forward_batch
        actions: Integer action codes, shape (batch,)
        weights: Per-row weights, shape (batch,)

    Returns:
        (flat parameter gradient, gradient w.r.t. the input features)
    """
    feats, h, s, probs, lstm_cache = cache
    v = params.views()
    dlogits = -probs * weights[:, None]
    dlogits[np.arange(len(actions)), actions] += weights
    grads = {
        "W2": dlogits.T @ s,
        "b2": dlogits.sum(axis=0),
    }
    du = (dlogits @ v["W2"]) * s * (1.0 - s)
    grads["W1"] = du.T @ h
    grads["b1"] = du.sum(axis=0)
    dh = du @ v["W1"]
    grads["Wx"], grads["Wh"], grads["b"], dfeats = lstm_backward(v["Wx"], v["Wh"], feats, lstm_cache, dh)
    flat = np.concatenate([grads[name].ravel() for name in params.arch.shapes()])
    return flat, dfeats


def forward(params: PolicyParams, hist: HistoryWindow, z: np.ndarray) -> np.ndarray:
    """
    Action distribution pi(. | history, z) over the canonical action order.

    Raises:
        ValueError: On a shape mismatch between params, history and z
    """
    if hist.size != params.arch.window:
        raise ValueError(f"History window {hist.size} does not match policy window {params.arch.window}")
    if z.shape != (params.arch.latent,):
        raise ValueError(f"Latent context shape {z.shape} does not match ({params.arch.latent},)")
    probs, _ = forward_batch(params, featurize(hist.raw(), z)[None])
    return probs[0]


def sample_action(dist: Sequence[float], rng: np.random.Generator) -> Action:
    """Inverse-CDF categorical sample over the canonical action order."""
    cdf = np.cumsum(dist)
    index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return Action(min(index, N_ACTIONS - 1))


def log_prob_and_grad(
    params: PolicyParams, hist: HistoryWindow, z: np.ndarray, action: Action
) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Log-probability of one action and its gradients.

    Returns:
        (log pi(a | hist, z), gradient w.r.t. the parameter vector, gradient w.r.t. z)
    """
    feats = featurize(hist.raw(), z)[None]
    probs, cache = forward_batch(params, feats)
    grad, dfeats = score_gradient(params, cache, np.array([int(action)]), np.ones(1))
    grad_z = dfeats[0, :, BASE_FEATURES:].sum(axis=0)
    return float(np.log(probs[0, int(action)])), grad, grad_z


def rollout(
    env: SearchEnvironment,
    params: PolicyParams,
    z: np.ndarray,
    horizon: int,
    rng: np.random.Generator,
    history: HistoryWindow,
) -> Tuple[Trajectory, HistoryWindow]:
    """
    Act autoregressively for up to `horizon` slots or until the episode ends.

    Args:
        env: Live environment
        params: Policy parameters (read-only)
        z: Latent context (zeros for plain RL)
        horizon: Maximum number of slots T
        rng: Action-sampling stream
        history: Window of the running episode before the first action

    Returns:
        (trajectory of the executed slots, history window after the last slot)
    """
    start = env.slot
    steps = []
    for _ in range(horizon):
        if env.done:
            break
        action = sample_action(forward(params, history, z), rng)
        message, reward, _ = env.step(action)
        steps.append(Step(action, message, reward))
        history = history.advance(message, action)
    return Trajectory(start, tuple(steps)), history
