"""Value-learning core: small ReLU MLP with exact backprop, uniform replay,
and an epsilon-greedy DQN agent with a periodically synced target network."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SimulationError


@dataclass
class DqnConfig:
    gamma: float = 0.95
    lr: float = 1e-3
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 20_000
    replay_capacity: int = 50_000
    batch_size: int = 64
    target_sync: int = 500
    hidden: tuple[int, ...] = (64, 64)
    grad_clip: float = 10.0


@dataclass(slots=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring; eviction is strictly oldest-first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._ring: list[Transition] = []
        self._write = 0
        self.inserted = 0

    def push(self, t: Transition) -> None:
        if len(self._ring) < self.capacity:
            self._ring.append(t)
        else:
            self._ring[self._write] = t
        self._write = (self._write + 1) % self.capacity
        self.inserted += 1

    def __len__(self) -> int:
        return len(self._ring)

    def snapshot(self) -> list[Transition]:
        """Contents oldest-first."""
        if len(self._ring) < self.capacity:
            return list(self._ring)
        return self._ring[self._write:] + self._ring[: self._write]

    def sample(self, rng: np.random.Generator, k: int) -> list[Transition]:
        idx = rng.choice(len(self._ring), size=k, replace=False)
        return [self._ring[int(i)] for i in idx]


class Mlp:
    """Affine + ReLU stack, identity output. float64 throughout so analytic
    gradients can be checked against central finite differences."""

    def __init__(self, layer_sizes: list[int], rng: np.random.Generator | None = None):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output layer sizes")
        self.layer_sizes = list(layer_sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            if rng is None:
                w = np.zeros((fan_out, fan_in))
            else:
                w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
            self.weights.append(w)
            self.biases.append(np.zeros(fan_out))

    def clone(self) -> "Mlp":
        other = Mlp(self.layer_sizes)
        other.copy_from(self)
        return other

    def copy_from(self, other: "Mlp") -> None:
        self.weights = [w.copy() for w in other.weights]
        self.biases = [b.copy() for b in other.biases]

    def _forward_cached(self, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        pre: list[np.ndarray] = []
        post: list[np.ndarray] = [x]
        a = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w.T + b
            pre.append(z)
            a = z if i == last else np.maximum(z, 0.0)
            post.append(a)
        return pre, post

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Accepts a single vector or a (batch, dim) matrix."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"input dim {x.shape[1]} != expected {self.layer_sizes[0]}")
        _, post = self._forward_cached(x)
        return post[-1][0] if single else post[-1]

    def loss_and_gradients(
        self,
        batch_inputs: np.ndarray,
        action_indices: np.ndarray,
        td_targets: np.ndarray,
    ) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
        """Mean squared TD error on the chosen-action outputs, with exact
        backprop gradients. Only the chosen output units receive error."""
        x = np.atleast_2d(np.asarray(batch_inputs, dtype=float))
        actions = np.asarray(action_indices, dtype=int)
        targets = np.asarray(td_targets, dtype=float)
        n = x.shape[0]
        if n == 0:
            raise ValueError("batch must be non-empty")
        pre, post = self._forward_cached(x)
        q = post[-1]
        chosen = q[np.arange(n), actions]
        err = chosen - targets
        loss = float(np.mean(err**2))

        delta = np.zeros_like(q)
        delta[np.arange(n), actions] = 2.0 * err / n
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.weights)  # type: ignore[list-item]
        for i in range(len(self.weights) - 1, -1, -1):
            grads[i] = (delta.T @ post[i], delta.sum(axis=0))
            if i > 0:
                delta = (delta @ self.weights[i]) * (pre[i - 1] > 0.0)
        return loss, grads

    def apply_update(self, gradients: list[tuple[np.ndarray, np.ndarray]], lr: float) -> None:
        """Plain SGD step."""
        if lr < 0:
            raise ValueError("lr must be >= 0")
        for (dw, db), w, b in zip(gradients, self.weights, self.biases):
            w -= lr * dw
            b -= lr * db

    def parameters(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


def clip_gradients(grads: list[tuple[np.ndarray, np.ndarray]], max_norm: float) -> list[tuple[np.ndarray, np.ndarray]]:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    total = 0.0
    for dw, db in grads:
        total += float(np.sum(dw**2)) + float(np.sum(db**2))
    norm = np.sqrt(total)
    if norm <= max_norm or norm == 0.0:
        return grads
    scale = max_norm / norm
    return [(dw * scale, db * scale) for dw, db in grads]


class DqnAgent:
    """Epsilon-greedy DQN with a target network synced every target_sync
    learn steps. Owns one PRNG stream; greedy evaluation (step=None) never
    touches it, so evaluation runs do not perturb training randomness."""

    def __init__(self, input_dim: int, n_actions: int, config: DqnConfig, seed: int):
        self.input_dim = input_dim
        self.n_actions = n_actions
        self.config = config
        self.rng = np.random.default_rng(seed)
        sizes = [input_dim, *config.hidden, n_actions]
        self.online = Mlp(sizes, self.rng)
        self.target = self.online.clone()
        self.train_steps = 0

    def epsilon(self, step: int) -> float:
        c = self.config
        if c.eps_decay_steps <= 0:
            return c.eps_end
        frac = min(1.0, max(0.0, step / c.eps_decay_steps))
        return c.eps_start + (c.eps_end - c.eps_start) * frac

    def q_values(self, state: np.ndarray) -> np.ndarray:
        return self.online.forward(state)

    def select_action(self, state: np.ndarray, step: int | None) -> int:
        """Epsilon-greedy; step=None means pure greedy (no RNG draw).
        Argmax ties break toward the lowest index."""
        if step is not None and self.rng.random() < self.epsilon(step):
            return int(self.rng.integers(self.n_actions))
        return int(np.argmax(self.online.forward(state)))

    def td_targets(self, batch: list[Transition]) -> np.ndarray:
        """y = r, or r + gamma * max_a Q_target(s') for non-terminal steps."""
        if not batch:
            raise ValueError("batch must be non-empty")
        next_states = np.stack([t.next_state for t in batch])
        next_q = self.target.forward(next_states).max(axis=1)
        rewards = np.array([t.reward for t in batch])
        cont = np.array([0.0 if t.done else 1.0 for t in batch])
        return rewards + self.config.gamma * cont * next_q

    def learn_batch(
        self,
        buffer: ReplayBuffer,
        batch_size: int | None = None,
        global_step: int | None = None,
    ) -> float | None:
        """One uniform-minibatch update; returns the loss, or None when the
        buffer is still smaller than the batch (skip, parameters untouched)."""
        bs = self.config.batch_size if batch_size is None else batch_size
        if len(buffer) < bs:
            return None
        batch = buffer.sample(self.rng, bs)
        targets = self.td_targets(batch)
        states = np.stack([t.state for t in batch])
        actions = np.array([t.action for t in batch])
        loss, grads = self.online.loss_and_gradients(states, actions, targets)
        if not np.isfinite(loss):
            raise SimulationError(f"non-finite training loss ({loss})")
        grads = clip_gradients(grads, self.config.grad_clip)
        self.online.apply_update(grads, self.config.lr)
        step = self.train_steps if global_step is None else global_step
        self.train_steps += 1
        if step % self.config.target_sync == 0:
            self.target.copy_from(self.online)
        return loss


CHECKPOINT_MAGIC = "steersim-checkpoint v1"

_CKPT_HYPERS = [
    ("gamma", float),
    ("lr", float),
    ("eps_start", float),
    ("eps_end", float),
    ("eps_decay_steps", int),
    ("replay_capacity", int),
    ("batch_size", int),
    ("target_sync", int),
    ("grad_clip", float),
]


def save_checkpoint(agent: DqnAgent, path: str | Path) -> None:
    """Portable text checkpoint: layer sizes, hyperparameters, then row-major
    W<i>/b<i> blocks with repr() floats (exact float64 round-trip)."""
    lines = [CHECKPOINT_MAGIC]
    sizes = agent.online.layer_sizes
    lines.append("layers " + " ".join(str(s) for s in sizes))
    for name, _ in _CKPT_HYPERS:
        lines.append(f"{name} {getattr(agent.config, name)!r}")
    lines.append(f"train_steps {agent.train_steps}")
    for i, (w, b) in enumerate(zip(agent.online.weights, agent.online.biases)):
        lines.append(f"W{i} {w.shape[0]} {w.shape[1]}")
        for row in w:
            lines.append(" ".join(repr(v) for v in row))
        lines.append(f"b{i} {b.shape[0]}")
        lines.append(" ".join(repr(v) for v in b))
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path: str | Path, seed: int = 0) -> DqnAgent:
    """Rebuild an agent for evaluation (or resumed training) from a checkpoint.
    The target network is restored as a copy of the online network."""
    text = Path(path).read_text().splitlines()
    if not text or text[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a {CHECKPOINT_MAGIC} file")
    pos = 1
    fields: dict[str, str] = {}
    while not text[pos].startswith("W0 "):
        key, value = text[pos].split(" ", 1)
        fields[key] = value
        pos += 1
    sizes = [int(s) for s in fields["layers"].split()]
    kwargs = {name: typ(fields[name]) for name, typ in _CKPT_HYPERS}
    config = DqnConfig(hidden=tuple(sizes[1:-1]), **kwargs)
    agent = DqnAgent(sizes[0], sizes[-1], config, seed)
    agent.train_steps = int(fields.get("train_steps", "0"))
    for i in range(len(sizes) - 1):
        header = text[pos].split()
        assert header[0] == f"W{i}", f"expected W{i} block, found {header[0]}"
        rows, cols = int(header[1]), int(header[2])
        pos += 1
        w = np.array([[float(v) for v in text[pos + r].split()] for r in range(rows)])
        assert w.shape == (rows, cols)
        pos += rows
        header = text[pos].split()
        assert header[0] == f"b{i}"
        pos += 1
        b = np.array([float(v) for v in text[pos].split()])
        pos += 1
        agent.online.weights[i] = w
        agent.online.biases[i] = b
    agent.target.copy_from(agent.online)
    return agent
