"""Phase 1 of the masking protocol on a deterministic event scheduler.

Every agent draws one uniform lattice value per neighbor, sends it, and
once it holds the counterpart from every neighbor computes its mask (the
wrapped sum of receive-minus-send differences) and its effective input
(input plus mask, mod 1).  Completion is agreed through an echo flood
with per-originator dedup: an agent is done when it has heard as many
distinct completion announcements as there are agents.

The scheduler delivers messages in pseudo-random order (per-message
latency, no FIFO per link), but agent randomness derives only from
(master seed, agent id), so masks and effective inputs are invariant
under delivery order; only the message log differs between scheduler
seeds.

``sample_phase1`` produces whole batches of trials with vectorized
uint64 arithmetic, bit-identical to running the event engine once per
trial seed — the audit harness's fast path.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .consensus import ConsensusResult
from .netgraph import Edge, Network
from .rng import SplitMix64, derive_seed, derive_seed_np, stream_output_np
from .unitinterval import MOD, RealLike, UFrac, add, from_real, neg, sum_frac

__all__ = [
    "Phase",
    "MessageKind",
    "MessageEvent",
    "AgentState",
    "Transcript",
    "Phase1Batch",
    "quantize_inputs",
    "mask_of",
    "run_phase1",
    "sample_phase1",
    "SCHEDULER_TAG",
]

# Tag for deriving a default scheduler seed from the master seed.
SCHEDULER_TAG = 0x5C4ED


class Phase(Enum):
    EXCHANGING = "exchanging"
    FLOODING = "flooding"
    DONE = "done"


class MessageKind(Enum):
    RANDOM_SHARE = "random_share"
    COMPLETION_FLOOD = "completion_flood"
    CONSENSUS_MSG = "consensus_msg"


@dataclass(frozen=True)
class MessageEvent:
    """One delivered message: (src, dst) must be adjacent for shares and
    consensus traffic; completion floods carry the originator id."""

    time: float
    src: int
    dst: int
    kind: MessageKind
    payload: int


@dataclass
class AgentState:
    """Mutable per-agent protocol state."""

    id: int
    input: UFrac
    sent: dict[int, UFrac] = field(default_factory=dict)
    received: dict[int, UFrac] = field(default_factory=dict)
    mask: UFrac | None = None
    effective: UFrac | None = None
    phase: Phase = Phase.EXCHANGING
    completion_heard: set[int] = field(default_factory=set)


@dataclass(frozen=True)
class Transcript:
    """Full record of one execution; identical (network, inputs, seeds)
    reproduce it byte for byte."""

    network: Network
    inputs_real: tuple[float, ...]
    inputs: tuple[UFrac, ...]
    shares: dict[tuple[int, int], UFrac]  # (sender, receiver) -> r
    edge_noise: dict[Edge, UFrac]
    masks: tuple[UFrac, ...]
    effective: tuple[UFrac, ...]
    log: tuple[MessageEvent, ...]
    master_seed: int
    scheduler_seed: int
    phase1_end_time: float
    outputs: tuple[float, ...] | None = None
    consensus: ConsensusResult | None = None
    # Worst-case phase 2: backend revealed every effective input to
    # every agent, so adversary views may use all of them.
    all_effective_revealed: bool = False

    def with_phase2(
        self,
        outputs: Sequence[float],
        consensus: ConsensusResult,
        revealed: bool,
        extra_log: Sequence[MessageEvent] = (),
    ) -> "Transcript":
        return replace(
            self,
            outputs=tuple(outputs),
            consensus=consensus,
            all_effective_revealed=revealed,
            log=self.log + tuple(extra_log),
        )


def quantize_inputs(inputs: Sequence[RealLike], n: int) -> tuple[UFrac, ...]:
    """Validate the normalized input range and quantize onto the lattice.

    Each input must lie in [0, 1/n) before quantization, and the
    quantized values must still sum below 1 so the fractional-sum
    identity recovers the plain sum.
    """
    if len(inputs) != n:
        raise ValueError(f"expected {n} inputs, got {len(inputs)}")
    bound = Fraction(1, n)
    quantized = []
    for i, x in enumerate(inputs):
        q = from_real(x)  # rejects non-finite values
        if not 0 <= Fraction(x) < bound:
            raise ValueError(f"input for agent {i} is {x}, outside [0, 1/{n})")
        quantized.append(q)
    if sum(q.raw for q in quantized) >= MOD:
        raise ValueError("quantized inputs sum to >= 1; inputs too close to the 1/n bound")
    return tuple(quantized)


def mask_of(sent: Mapping[int, UFrac], received: Mapping[int, UFrac]) -> UFrac:
    """Mask from a complete set of neighbor shares: the wrapped sum of
    (received - sent) over neighbors."""
    if set(sent) != set(received):
        missing = set(sent) ^ set(received)
        raise ValueError(f"incomplete share exchange for neighbors {sorted(missing)}")
    return sum_frac(add(received[j], neg(sent[j])) for j in sent)


def _resolve_share(injected, i: int, j: int) -> UFrac | None:
    if injected is None:
        return None
    r = injected.get((i, j))
    if r is None:
        return None
    return r if isinstance(r, UFrac) else from_real(r)


def run_phase1(
    net: Network,
    inputs: Sequence[RealLike],
    seed: int,
    *,
    scheduler_seed: int | None = None,
    injected_shares: Mapping[tuple[int, int], UFrac | RealLike] | None = None,
    record_log: bool = True,
) -> Transcript:
    """Execute phase 1 on a connected network and return its transcript.

    ``seed`` drives all agent randomness; ``scheduler_seed`` only the
    message delivery order (derived from ``seed`` when omitted).
    ``injected_shares`` overrides individual r values, keyed by
    (sender, receiver) — used to replay worked examples.
    """
    if net.nodes != tuple(range(net.n)):
        raise ValueError("protocol network must use agent ids 0..n-1")
    if not net.is_connected():
        raise ValueError("network must be connected")
    quantized = quantize_inputs(inputs, net.n)
    if scheduler_seed is None:
        scheduler_seed = derive_seed(seed, SCHEDULER_TAG)

    adjacency = net.adjacency()
    states = [AgentState(id=i, input=quantized[i]) for i in range(net.n)]
    sched = SplitMix64(scheduler_seed)
    queue: list[tuple[float, int, int, int, MessageKind, int]] = []
    seq = 0
    log: list[MessageEvent] = []
    now = 0.0

    def send(src: int, dst: int, kind: MessageKind, payload: int) -> None:
        nonlocal seq
        delivery = now + 0.5 + sched.next_unit()
        heapq.heappush(queue, (delivery, seq, src, dst, kind, payload))
        seq += 1

    def finish_exchange(st: AgentState) -> None:
        st.mask = mask_of(st.sent, st.received)
        st.effective = add(st.input, st.mask)
        st.phase = Phase.FLOODING
        st.completion_heard.add(st.id)
        for j in adjacency[st.id]:
            send(st.id, j, MessageKind.COMPLETION_FLOOD, st.id)
        if len(st.completion_heard) == net.n:
            st.phase = Phase.DONE

    # Every agent draws and transmits its shares up front, independent of
    # anything it has received.
    for st in states:
        stream = SplitMix64(derive_seed(seed, st.id))
        for j in adjacency[st.id]:
            drawn = stream.next_ufrac()
            r = _resolve_share(injected_shares, st.id, j)
            st.sent[j] = drawn if r is None else r
        for j in adjacency[st.id]:
            send(st.id, j, MessageKind.RANDOM_SHARE, st.sent[j].raw)
    for st in states:
        if not adjacency[st.id]:  # n == 1: nothing to exchange
            finish_exchange(st)

    while queue:
        now, _, src, dst, kind, payload = heapq.heappop(queue)
        if record_log:
            log.append(MessageEvent(now, src, dst, kind, payload))
        st = states[dst]
        if kind is MessageKind.RANDOM_SHARE:
            st.received[src] = UFrac(payload)
            if st.phase is Phase.EXCHANGING and len(st.received) == len(adjacency[dst]):
                finish_exchange(st)
        elif kind is MessageKind.COMPLETION_FLOOD:
            if payload not in st.completion_heard:
                st.completion_heard.add(payload)
                for j in adjacency[dst]:
                    if j != src:
                        send(dst, j, MessageKind.COMPLETION_FLOOD, payload)
                if st.phase is Phase.FLOODING and len(st.completion_heard) == net.n:
                    st.phase = Phase.DONE

    if any(st.phase is not Phase.DONE for st in states):
        raise RuntimeError("phase 1 ended with agents not done; scheduler drained early")

    shares = {(i, j): states[i].sent[j] for i in range(net.n) for j in adjacency[i]}
    edge_noise = {
        (i, j): add(shares[(j, i)], neg(shares[(i, j)])) for (i, j) in net.edges
    }
    return Transcript(
        network=net,
        inputs_real=tuple(float(Fraction(x)) for x in inputs),
        inputs=quantized,
        shares=shares,
        edge_noise=edge_noise,
        masks=tuple(st.mask for st in states),  # type: ignore[arg-type]
        effective=tuple(st.effective for st in states),  # type: ignore[arg-type]
        log=tuple(log),
        master_seed=seed,
        scheduler_seed=scheduler_seed,
        phase1_end_time=now,
    )


@dataclass(frozen=True)
class Phase1Batch:
    """Lattice values of many independent phase-1 trials, as uint64 arrays.

    Row t is bit-identical to the transcript of ``run_phase1`` with
    master seed ``trial_seeds[t]``.
    """

    network: Network
    inputs: tuple[UFrac, ...]
    trial_seeds: np.ndarray  # (T,)
    edge_noise: np.ndarray  # (T, |E|), columns in sorted edge order
    masks: np.ndarray  # (T, n)
    effective: np.ndarray  # (T, n)

    @property
    def trials(self) -> int:
        return self.trial_seeds.shape[0]


def sample_phase1(net: Network, inputs: Sequence[RealLike], trial_seeds: np.ndarray) -> Phase1Batch:
    """Vectorized phase-1 sampling for a batch of per-trial master seeds.

    Scheduling is irrelevant to the sampled quantities (asynchrony
    independence), so the batch skips the event engine entirely and
    evaluates the closed-form stream outputs.
    """
    if net.nodes != tuple(range(net.n)):
        raise ValueError("protocol network must use agent ids 0..n-1")
    if not net.is_connected():
        raise ValueError("network must be connected")
    quantized = quantize_inputs(inputs, net.n)
    seeds = np.ascontiguousarray(trial_seeds, dtype=np.uint64)
    trials = seeds.shape[0]
    adjacency = net.adjacency()

    agent_seeds = np.empty((trials, net.n), dtype=np.uint64)
    for i in range(net.n):
        agent_seeds[:, i] = derive_seed_np(seeds, i)

    # r value agent i sends to its k-th sorted neighbor is stream output k.
    directed: dict[tuple[int, int], np.ndarray] = {}
    for i in range(net.n):
        for k, j in enumerate(adjacency[i]):
            directed[(i, j)] = stream_output_np(agent_seeds[:, i], k + 1)

    edge_noise = np.empty((trials, len(net.edges)), dtype=np.uint64)
    masks = np.zeros((trials, net.n), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for c, (i, j) in enumerate(net.edges):
            b = directed[(j, i)] - directed[(i, j)]
            edge_noise[:, c] = b
            masks[:, i] += b
            masks[:, j] -= b
        effective = masks + np.array([q.raw for q in quantized], dtype=np.uint64)
    return Phase1Batch(
        network=net,
        inputs=quantized,
        trial_seeds=seeds,
        edge_noise=edge_noise,
        masks=masks,
        effective=effective,
    )
