"""Generation-streaming simulation on the full binary tree.

Randomness is node-addressed and splittable: every node of every
replicate owns a counter-based stream derived by avalanche mixing
(splitmix64 finalizer) of the master seed, the replicate index and the
node's heap code 2^g + i. Trajectories are therefore bit-identical
regardless of evaluation order, chunking or parallelism, and any node
can be re-drawn in isolation.

Stream layout within one replicate:
  * heap code 0 is reserved for the initial draw at the root,
  * heap code 2^g + i feeds the transition at node (g, i), i.e. the
    randomness used to generate that node's two children.
The map code -> code*GOLDEN + 1 (mod 2^64) is a bijection, XOR with the
replicate key and the avalanche finisher are bijections too, so stream
states never collide within a replicate.
"""

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Heap codes live in uint64; generation 63 would overflow 2^g + i.
MAX_GENERATION = 62

_TWO_PI = 2.0 * np.pi

GENERATION_SCOPE = "generation_n"
TREE_SCOPE = "tree_n"


def _mix(z: int) -> int:
    """splitmix64 finalizer on a python int (always in [0, 2^64))."""
    z &= MASK64
    z ^= z >> 30
    z = (z * _MIX1) & MASK64
    z ^= z >> 27
    z = (z * _MIX2) & MASK64
    z ^= z >> 31
    return z


def _mix_u64(z: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer on a uint64 ndarray."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


def _u64_to_uniform(out):
    """Map uint64 words to (0, 1): take the top 53 bits, offset by half
    a step so 0 and 1 are never returned (safe under log)."""
    return ((out >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass(frozen=True)
class NodeAddress:
    """Position in the full binary tree: generation g, index i in [0, 2^g)."""

    generation: int
    index: int

    def __post_init__(self):
        if self.generation < 0:
            raise ValueError("generation must be non-negative")
        if self.generation > MAX_GENERATION:
            raise OverflowError(
                f"generation {self.generation} exceeds the uint64 heap-code "
                f"capacity (max {MAX_GENERATION})"
            )
        if not 0 <= self.index < (1 << self.generation):
            raise ValueError(
                f"index {self.index} out of range for generation {self.generation}"
            )

    @property
    def heap_code(self) -> int:
        return (1 << self.generation) + self.index


def node_children(addr: NodeAddress):
    """Children of (g, i): ((g+1, 2i), (g+1, 2i+1))."""
    g, i = addr.generation + 1, 2 * addr.index
    return NodeAddress(g, i), NodeAddress(g, i + 1)


@dataclass(frozen=True)
class ReplicateSeed:
    """(master_seed, replicate_index): the identity of one replicate."""

    master_seed: int
    replicate_index: int

    def __post_init__(self):
        if self.replicate_index < 0:
            raise ValueError("replicate_index must be non-negative")

    def key(self) -> int:
        """64-bit replicate key; chained avalanche keeps nearby master
        seeds / replicate indices statistically unrelated."""
        return _mix((_mix(self.master_seed) + ((self.replicate_index + 1) * GOLDEN)) & MASK64)


class NodeStream:
    """Counter-based random stream of one node.

    Draw k is a pure function of (state, k); there is no hidden cursor,
    so evaluation order cannot matter. Transcendentals go through numpy
    scalars on purpose: numpy's scalar and array paths are bit-identical
    while libm (the math module) differs in the last ulp for log/exp.
    """

    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & MASK64

    def raw(self, k: int) -> int:
        return _mix((self.state + (k + 1) * GOLDEN) & MASK64)

    def uniform(self, k: int) -> float:
        return float(((self.raw(k) >> 11) + 0.5) * 2.0**-53)

    def normal_pair(self, base_k: int = 0):
        """Two independent N(0,1) draws by Box-Muller from draws
        (base_k, base_k+1)."""
        u1 = np.float64(self.uniform(base_k))
        u2 = np.float64(self.uniform(base_k + 1))
        r = np.sqrt(-2.0 * np.log(u1))
        theta = _TWO_PI * u2
        return float(r * np.cos(theta)), float(r * np.sin(theta))


def node_randomness(seed: ReplicateSeed, addr: NodeAddress) -> NodeStream:
    """The stream owned by `addr` within `seed`'s replicate."""
    return NodeStream(_mix(seed.key() ^ ((addr.heap_code * GOLDEN + 1) & MASK64)))


def initial_randomness(seed: ReplicateSeed) -> NodeStream:
    """The reserved stream (heap code 0) feeding the initial draw."""
    return NodeStream(_mix(seed.key() ^ 1))


# -- vectorized twins of the scalar stream (used by the batch harness) ------

def generation_states(keys: np.ndarray, generation: int) -> np.ndarray:
    """uint64 stream states of all nodes of one generation, for a block
    of replicate keys; shape (len(keys), 2^generation)."""
    if generation > MAX_GENERATION:
        raise OverflowError(f"generation {generation} exceeds heap-code capacity")
    codes = (np.uint64(1 << generation) + np.arange(1 << generation, dtype=np.uint64))
    codes = codes * np.uint64(GOLDEN) + np.uint64(1)
    return _mix_u64(np.asarray(keys, dtype=np.uint64)[:, None] ^ codes[None, :])


def initial_states(keys: np.ndarray) -> np.ndarray:
    """uint64 states of the reserved initial streams, shape (len(keys),)."""
    return _mix_u64(np.asarray(keys, dtype=np.uint64) ^ np.uint64(1))


def stream_uniforms(states: np.ndarray, k: int) -> np.ndarray:
    """Draw k of every stream in `states`, as uniforms in (0, 1)."""
    offset = np.uint64(((k + 1) * GOLDEN) & MASK64)
    return _u64_to_uniform(_mix_u64(states + offset))


def stream_normal_pairs(states: np.ndarray, base_k: int = 0):
    """Box-Muller pairs from draws (base_k, base_k+1) of every stream."""
    u1 = stream_uniforms(states, base_k)
    u2 = stream_uniforms(states, base_k + 1)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = _TWO_PI * u2
    return r * np.cos(theta), r * np.sin(theta)


# -- simulation --------------------------------------------------------------

@dataclass(frozen=True)
class GenerationBuffer:
    """States of one whole generation; states[i] is node (generation, i)."""

    generation: int
    states: np.ndarray


@dataclass(frozen=True)
class TransitionKernel:
    """Sampling procedure (parent state, node randomness) -> two children.

    The scalar `sample` is the defining contract (any kernel); `sample_block`,
    when present, must be its vectorized bit-identical twin acting on a whole
    generation at once and is what the batch harness calls.
    """

    sample: Callable[[float, NodeStream], tuple]
    descriptor: str
    sample_block: Callable = None


def simulate_generations(
    kernel: TransitionKernel,
    initial_sampler: Callable[[NodeStream], float],
    n: int,
    seed: ReplicateSeed,
) -> Iterator[GenerationBuffer]:
    """Yield GenerationBuffer for g = 0..n, parent buffer to children.

    Only the current generation is materialized here; consumers that
    need the whole tree must store the buffers themselves. Children of
    node u are drawn from u's own stream, so any traversal or
    parallelization over nodes reproduces the same tree.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > MAX_GENERATION:
        raise OverflowError(f"tree depth {n} exceeds heap-code capacity")
    states = np.array([initial_sampler(initial_randomness(seed))], dtype=float)
    yield GenerationBuffer(0, states)
    for g in range(n):
        nxt = np.empty(2 << g, dtype=float)
        for i in range(1 << g):
            stream = node_randomness(seed, NodeAddress(g, i))
            y, z = kernel.sample(states[i], stream)
            nxt[2 * i] = y
            nxt[2 * i + 1] = z
        states = nxt
        yield GenerationBuffer(g + 1, states)


def collect_statistic(
    generations: Iterable[GenerationBuffer],
    f: Callable[[np.ndarray], np.ndarray],
    scope: str,
    n: int,
) -> float:
    """Additive statistic over the stream: M_{G_n}(f) or M_{T_n}(f).

    `f` must accept ndarray input. The sum is accumulated online so a
    streamed simulation never holds more than one generation.
    """
    if scope not in (GENERATION_SCOPE, TREE_SCOPE):
        raise ValueError(f"unknown scope {scope!r}")
    total = 0.0
    last_seen = -1
    for buf in generations:
        if buf.generation != last_seen + 1:
            raise ValueError(
                f"non-contiguous stream: generation {buf.generation} after {last_seen}"
            )
        last_seen = buf.generation
        if buf.generation > n:
            break
        term = float(np.sum(f(buf.states)))
        if scope == TREE_SCOPE:
            total += term
        elif buf.generation == n:
            total = term
    if last_seen < n:
        raise ValueError(
            f"incomplete simulation: stream ended at generation {last_seen}, "
            f"needed {n}"
        )
    return total


def dump_trajectory(generations: Iterable[GenerationBuffer], fh) -> None:
    """Write (generation, index, state) CSV rows, generations ascending."""
    fh.write("generation,index,state\n")
    for buf in generations:
        for i, s in enumerate(buf.states):
            fh.write(f"{buf.generation},{i},{float(s)!r}\n")
