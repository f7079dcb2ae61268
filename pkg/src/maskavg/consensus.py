"""Distributed average-consensus backends for phase 2, plus final output
assembly.

Phase 2 runs in double arithmetic on the values n * effective_input_i:
their average is the sum of effective inputs, whose fractional part
divided by n recovers the average of the true inputs.  Three backends
are provided:

* ``exact`` — every agent learns the whole multiset of effective inputs
  and takes the exact lattice fractional sum.  This is also the
  worst-case backend the privacy analysis assumes, since it reveals all
  effective inputs to all agents.
* ``sync`` — synchronous linear iterations with Metropolis weights,
  which are doubly stochastic on any graph without global knowledge.
* ``gossip`` — asynchronous randomized gossip: a uniformly random edge
  averages its two endpoint values each step, conserving the sum.

Backends converge when the spread (max minus min estimate) falls within
epsilon; they flag non-convergence instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .netgraph import Edge, Network
from .rng import SplitMix64
from .unitinterval import UFrac, sum_frac, to_real

__all__ = [
    "BackendConfig",
    "ConsensusResult",
    "OutputAssembly",
    "exact_flood_sum",
    "sync_linear_consensus",
    "random_gossip",
    "run_backend",
    "assemble_output",
    "BACKEND_KINDS",
]

BACKEND_KINDS = ("exact", "sync", "gossip")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "exact"
    epsilon: float = 1e-10
    max_rounds: int = 1_000_000

    def __post_init__(self) -> None:
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}; expected one of {BACKEND_KINDS}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be non-negative")


@dataclass(frozen=True)
class ConsensusResult:
    """Per-agent estimates of the sum of the backend's input vector."""

    backend: str
    estimates: tuple[float, ...]
    rounds: int
    converged: bool
    epsilon: float
    exact_sum: UFrac | None = None  # lattice fractional sum (exact backend)
    edge_sequence: tuple[Edge, ...] = ()  # gossip pair picks, when recorded

    def spread(self) -> float:
        return max(self.estimates) - min(self.estimates)


@dataclass(frozen=True)
class OutputAssembly:
    """Final per-agent outputs plus the raw estimates they came from."""

    outputs: tuple[float, ...]
    estimates: tuple[float, ...]
    converged: bool
    # True where an estimate sits within epsilon of an integer, making
    # the fractional-part step ill-conditioned; reported, never hidden.
    boundary_flags: tuple[bool, ...]


def exact_flood_sum(net: Network, values: Sequence[UFrac]) -> list[UFrac]:
    """Every agent's exact lattice fractional sum of all values.

    Models the worst-case protocol in which each agent floods its value
    to everyone: all agents end up with the same exact result (and, in
    the privacy accounting, with every individual value).
    """
    if not net.is_connected():
        raise ValueError("network must be connected")
    if len(values) != net.n:
        raise ValueError(f"expected {net.n} values, got {len(values)}")
    total = sum_frac(values)
    return [total] * net.n


def _metropolis_matrix(net: Network) -> np.ndarray:
    deg = {i: net.degree(i) for i in net.nodes}
    index = {v: k for k, v in enumerate(net.nodes)}
    w = np.zeros((net.n, net.n))
    for i, j in net.edges:
        a, b = index[i], index[j]
        w[a, b] = w[b, a] = 1.0 / (1.0 + max(deg[i], deg[j]))
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    return w


def sync_linear_consensus(
    net: Network, values: Sequence[float], epsilon: float, max_rounds: int
) -> ConsensusResult:
    """Synchronous averaging with Metropolis weights.

    Each round every agent moves toward its neighbors:
    x_i += sum_j w_ij (x_j - x_i) with w_ij = 1/(1 + max(deg_i, deg_j)).
    The weight matrix is symmetric doubly stochastic, so the mean of the
    estimates is conserved to machine precision.
    """
    if not net.is_connected():
        raise ValueError("network must be connected")
    x = np.asarray(values, dtype=np.float64).copy()
    if x.shape != (net.n,):
        raise ValueError(f"expected {net.n} values")
    w = _metropolis_matrix(net)
    rounds = 0
    while x.max() - x.min() > epsilon and rounds < max_rounds:
        x = w @ x
        rounds += 1
    return ConsensusResult(
        backend="sync",
        estimates=tuple(float(v) for v in x),
        rounds=rounds,
        converged=bool(x.max() - x.min() <= epsilon),
        epsilon=epsilon,
    )


def random_gossip(
    net: Network,
    values: Sequence[float],
    epsilon: float,
    max_iters: int,
    seed: int,
    *,
    record_steps: bool = False,
) -> ConsensusResult:
    """Asynchronous pairwise averaging over uniformly random edges.

    Each step replaces both endpoint values of one random edge with
    their midpoint, which conserves the sum and never increases the
    spread.  Stops when the spread is within epsilon.
    """
    if not net.is_connected():
        raise ValueError("network must be connected")
    if not net.edges and net.n > 1:
        raise ValueError("gossip needs at least one edge")
    x = [float(v) for v in values]
    if len(x) != net.n:
        raise ValueError(f"expected {net.n} values")
    index = {v: k for k, v in enumerate(net.nodes)}
    stream = SplitMix64(seed)
    picks: list[Edge] = []
    iters = 0
    while (max(x) - min(x) > epsilon) and iters < max_iters:
        e = net.edges[stream.next_below(len(net.edges))]
        a, b = index[e[0]], index[e[1]]
        mid = 0.5 * (x[a] + x[b])
        x[a] = x[b] = mid
        if record_steps:
            picks.append(e)
        iters += 1
    return ConsensusResult(
        backend="gossip",
        estimates=tuple(x),
        rounds=iters,
        converged=max(x) - min(x) <= epsilon,
        epsilon=epsilon,
        edge_sequence=tuple(picks),
    )


def run_backend(
    net: Network,
    effective: Sequence[UFrac],
    config: BackendConfig,
    seed: int,
    *,
    record_steps: bool = False,
) -> ConsensusResult:
    """Run the configured backend on the scaled effective inputs n*s~_i."""
    if config.kind == "exact":
        sums = exact_flood_sum(net, effective)
        real_sum = float(sum(to_real(v) for v in effective))
        return ConsensusResult(
            backend="exact",
            estimates=tuple([real_sum] * net.n),
            rounds=0,
            converged=True,
            epsilon=0.0,
            exact_sum=sums[0],
        )
    scaled = [net.n * to_real(v) for v in effective]
    if config.kind == "sync":
        return sync_linear_consensus(net, scaled, config.epsilon, config.max_rounds)
    return random_gossip(
        net, scaled, config.epsilon, config.max_rounds, seed, record_steps=record_steps
    )


def assemble_output(result: ConsensusResult, n: int) -> OutputAssembly:
    """Fractional part of each agent's sum estimate, divided by n.

    The fractional-part step is what strips the masks: it maps the sum
    of effective inputs back to the sum of true inputs.  Estimates close
    to an integer are flagged since frac() jumps there.  A non-converged
    result is assembled best-effort with the flag propagated.
    """
    if result.exact_sum is not None:
        frac = to_real(result.exact_sum)
        return OutputAssembly(
            outputs=tuple([frac / n] * n),
            estimates=result.estimates,
            converged=result.converged,
            boundary_flags=tuple([False] * n),
        )
    outputs = []
    flags = []
    margin = max(result.epsilon, 1e-15)
    for est in result.estimates:
        frac = est - np.floor(est)
        outputs.append(float(frac / n))
        flags.append(bool(abs(est - np.round(est)) <= margin))
    return OutputAssembly(
        outputs=tuple(outputs),
        estimates=result.estimates,
        converged=result.converged,
        boundary_flags=tuple(flags),
    )
