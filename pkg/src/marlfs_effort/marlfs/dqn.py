"""Small numpy DQN: MLP Q-network with hand-written backprop, Adam, replay buffer."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DESELECT, SELECT = 0, 1


class QNetwork:
    """ReLU MLP mapping a state vector to Q-values for (deselect, select).

    Weights are stored as ``(fan_in, fan_out)`` matrices so a batch of states
    (rows) is multiplied from the left.
    """

    def __init__(self, sizes: Sequence[int] = (8, 64, 8, 2), rng: Optional[np.random.Generator] = None):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = tuple(int(s) for s in sizes)
        rng = np.random.default_rng(0) if rng is None else rng
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def state_dim(self) -> int:
        return self.sizes[0]

    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def set_params(self, params: Sequence[np.ndarray]) -> None:
        for i in range(len(self.weights)):
            self.weights[i] = np.array(params[2 * i], dtype=float)
            self.biases[i] = np.array(params[2 * i + 1], dtype=float)

    def copy_from(self, other: "QNetwork") -> None:
        if other.sizes != self.sizes:
            raise ValueError("network shapes differ")
        self.set_params([p.copy() for p in other.params()])

    def clone(self) -> "QNetwork":
        net = QNetwork.__new__(QNetwork)
        net.sizes = self.sizes
        net.weights = [W.copy() for W in self.weights]
        net.biases = [b.copy() for b in self.biases]
        return net

    def _forward(self, S: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        acts = [S]
        h = S
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = z if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return h, acts

    def forward(self, s) -> np.ndarray:
        """Q-values; a single state gives shape (2,), a batch gives (B, 2)."""
        s = np.asarray(s, dtype=float)
        if s.shape[-1] != self.state_dim:
            raise ValueError(f"state has {s.shape[-1]} entries, expected {self.state_dim}")
        q, _ = self._forward(np.atleast_2d(s))
        return q[0] if s.ndim == 1 else q

    def loss_and_grads(self, states, actions, targets) -> tuple[float, list[np.ndarray]]:
        """Mean squared TD error on the taken actions, with gradients in ``params()`` order."""
        S = np.atleast_2d(np.asarray(states, dtype=float))
        a = np.asarray(actions, dtype=int)
        t = np.asarray(targets, dtype=float)
        B = S.shape[0]
        q, acts = self._forward(S)
        rows = np.arange(B)
        diff = q[rows, a] - t
        loss = float(np.mean(diff * diff))
        delta = np.zeros_like(q)
        delta[rows, a] = 2.0 * diff / B
        grads: list[np.ndarray] = []
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = acts[i]
            gW = h_in.T @ delta
            gb = delta.sum(axis=0)
            grads = [gW, gb] + grads
            if i > 0:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0.0)
        return loss, grads


class Adam:
    def __init__(self, lr: float = 0.01, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: Optional[list[np.ndarray]] = None
        self.v: Optional[list[np.ndarray]] = None
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """Update ``params`` in place."""
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool


class ReplayBuffer:
    """Fixed-capacity FIFO of transitions; the oldest entry is overwritten first."""

    def __init__(self, capacity: int = 2000, state_dim: int = 8):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.state_dim = state_dim
        self.s = np.zeros((capacity, state_dim))
        self.a = np.zeros(capacity, dtype=np.int64)
        self.r = np.zeros(capacity)
        self.s_next = np.zeros((capacity, state_dim))
        self.terminal = np.zeros(capacity, dtype=bool)
        self._next = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, s, a: int, r: float, s_next, terminal: bool) -> None:
        s = np.asarray(s, dtype=float)
        s_next = np.asarray(s_next, dtype=float)
        if s.shape != (self.state_dim,) or s_next.shape != (self.state_dim,):
            raise ValueError(f"states must have length {self.state_dim}")
        if a not in (DESELECT, SELECT):
            raise ValueError("action must be 0 or 1")
        i = self._next
        self.s[i] = s
        self.a[i] = a
        self.r[i] = r
        self.s_next[i] = s_next
        self.terminal[i] = terminal
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _order(self) -> np.ndarray:
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def transitions(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        return [Transition(self.s[i].copy(), int(self.a[i]), float(self.r[i]),
                           self.s_next[i].copy(), bool(self.terminal[i])) for i in self._order()]

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample without replacement: (s, a, r, s_next, terminal) arrays."""
        if batch_size > self.size:
            raise ValueError(f"cannot sample {batch_size} from {self.size} transitions")
        idx = rng.choice(self.size, size=batch_size, replace=False)
        return self.s[idx], self.a[idx], self.r[idx], self.s_next[idx], self.terminal[idx]


def epsilon_greedy(q, epsilon: float, rng: np.random.Generator) -> int:
    """With probability ``epsilon`` take the greedy action (ties select), else a uniform one."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if rng.random() < epsilon:
        return SELECT if q[SELECT] >= q[DESELECT] else DESELECT
    return int(rng.integers(2))


def bellman_target(r, gamma: float, q_next, terminal):
    """r + gamma * max_a' Q_target(s', a'), or just r on terminal transitions.

    Works on scalars or on a batch (``q_next`` of shape (B, 2)).
    """
    q_next = np.asarray(q_next, dtype=float)
    best = q_next.max(axis=-1)
    out = np.where(np.asarray(terminal, dtype=bool), r, r + gamma * best)
    return float(out) if out.ndim == 0 else out


@dataclass
class QAgent:
    online: QNetwork
    target: QNetwork
    buffer: ReplayBuffer
    optimizer: Adam
    rng: np.random.Generator
    learn_steps: int = 0
    losses: list = field(default_factory=list)

    @classmethod
    def create(cls, sizes=(8, 64, 8, 2), capacity: int = 2000, lr: float = 0.01,
               rng: Optional[np.random.Generator] = None) -> "QAgent":
        rng = np.random.default_rng(0) if rng is None else rng
        online = QNetwork(sizes, rng)
        return cls(online=online, target=online.clone(), buffer=ReplayBuffer(capacity, sizes[0]),
                   optimizer=Adam(lr), rng=rng)

    def act(self, state, epsilon: float) -> int:
        return epsilon_greedy(self.online.forward(state), epsilon, self.rng)


def learn_step(agent: QAgent, batch_size: int = 32, gamma: float = 0.9,
               target_sync_every: int = 100) -> Optional[float]:
    """One replay update. Returns the batch loss, or None while the buffer is underfull."""
    if len(agent.buffer) < batch_size:
        return None
    s, a, r, s_next, term = agent.buffer.sample(batch_size, agent.rng)
    targets = bellman_target(r, gamma, agent.target.forward(s_next), term)
    loss, grads = agent.online.loss_and_grads(s, a, targets)
    agent.optimizer.step(agent.online.params(), grads)
    agent.learn_steps += 1
    if agent.learn_steps % target_sync_every == 0:
        agent.target.copy_from(agent.online)
    return loss
