"""Elman recurrent network genomes: init, forward pass, Gaussian mutation.

A genome is one flat float64 parameter vector; the weight matrices are
views into it, in serialization order: input->hidden, hidden->hidden,
hidden->output, hidden bias, output bias.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

DEFAULT_HIDDEN = 32

# Hidden activations are capped so that saturating genomes (spectral radius
# above 1 after ReLU) stay finite over long episodes; keeps argmax
# well-defined and replay exact on every backend.
HIDDEN_CLAMP = 1.0e6


@dataclass(frozen=True)
class NetworkDims:
    inputs: int
    hidden: int = DEFAULT_HIDDEN
    outputs: int = 4

    def __post_init__(self):
        if self.inputs < 0:
            raise ValueError(f"inputs must be >= 0, got {self.inputs}")
        if self.hidden < 1 or self.outputs < 1:
            raise ValueError(f"hidden and outputs must be >= 1, got {self}")

    @property
    def param_count(self) -> int:
        i, h, o = self.inputs, self.hidden, self.outputs
        return h * i + h * h + o * h + h + o


class Genome:
    """Immutable parameter vector plus matrix views."""

    __slots__ = ("dims", "flat")

    def __init__(self, dims: NetworkDims, flat: np.ndarray):
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        if flat.shape != (dims.param_count,):
            raise ValueError(f"expected {dims.param_count} parameters, got {flat.shape}")
        if not np.all(np.isfinite(flat)):
            raise ValueError("genome parameters must be finite")
        flat.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "flat", flat)

    def __setattr__(self, name, value):
        raise AttributeError("Genome is immutable")

    def _split(self):
        i, h, o = self.dims.inputs, self.dims.hidden, self.dims.outputs
        a = h * i
        b = a + h * h
        c = b + o * h
        d = c + h
        return a, b, c, d

    @property
    def input_to_hidden(self) -> np.ndarray:
        a, _, _, _ = self._split()
        return self.flat[:a].reshape(self.dims.hidden, self.dims.inputs)

    @property
    def hidden_to_hidden(self) -> np.ndarray:
        a, b, _, _ = self._split()
        return self.flat[a:b].reshape(self.dims.hidden, self.dims.hidden)

    @property
    def hidden_to_output(self) -> np.ndarray:
        _, b, c, _ = self._split()
        return self.flat[b:c].reshape(self.dims.outputs, self.dims.hidden)

    @property
    def hidden_bias(self) -> np.ndarray:
        _, _, c, d = self._split()
        return self.flat[c:d]

    @property
    def output_bias(self) -> np.ndarray:
        _, _, _, d = self._split()
        return self.flat[d:]

    @property
    def param_count(self) -> int:
        return self.dims.param_count

    def __eq__(self, other):
        return (
            isinstance(other, Genome)
            and self.dims == other.dims
            and np.array_equal(self.flat, other.flat)
        )

    def __hash__(self):
        return hash((self.dims, self.flat.tobytes()))


def init_genome(dims: NetworkDims, rng: np.random.Generator) -> Genome:
    """Draw every weight and bias i.i.d. standard normal."""
    return Genome(dims, rng.standard_normal(dims.param_count))


def new_hidden_state(dims: NetworkDims) -> np.ndarray:
    return np.zeros(dims.hidden)


def forward(genome: Genome, hidden: np.ndarray, x: np.ndarray):
    """One recurrent step; returns (raw outputs, new hidden state).

    Outputs are linear; action selection (argmax) is the caller's job.
    """
    dims = genome.dims
    x = np.asarray(x, dtype=np.float64)
    hidden = np.asarray(hidden, dtype=np.float64)
    if x.shape != (dims.inputs,):
        raise ValueError(f"input must have shape ({dims.inputs},), got {x.shape}")
    if hidden.shape != (dims.hidden,):
        raise ValueError(f"hidden state must have shape ({dims.hidden},), got {hidden.shape}")
    # Accumulation order (bias, then input terms, then recurrent terms, in
    # index order) is fixed: the episode engines replicate it exactly so
    # that single-agent and population runs stay bit-identical.
    pre = genome.hidden_bias.copy()
    w_ih = genome.input_to_hidden
    for k in range(dims.inputs):
        pre += w_ih[:, k] * x[k]
    w_hh = genome.hidden_to_hidden
    for k in range(dims.hidden):
        pre += w_hh[:, k] * hidden[k]
    new_hidden = np.minimum(np.maximum(pre, 0.0), HIDDEN_CLAMP)
    y = genome.output_bias.copy()
    w_ho = genome.hidden_to_output
    for k in range(dims.hidden):
        y += w_ho[:, k] * new_hidden[k]
    return y, new_hidden


def mutate(genome: Genome, sigma: float, rng: np.random.Generator) -> Genome:
    """Return a child genome = parent + N(0, sigma^2) noise per parameter."""
    if sigma <= 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return Genome(genome.dims, genome.flat + sigma * rng.standard_normal(genome.param_count))


# --- serialization -----------------------------------------------------------
# Layout: three little-endian uint32 (inputs, hidden, outputs) followed by the
# flat float64 parameter vector in view order.

_HEADER = struct.Struct("<III")


def genome_to_bytes(genome: Genome) -> bytes:
    d = genome.dims
    return _HEADER.pack(d.inputs, d.hidden, d.outputs) + genome.flat.astype("<f8").tobytes()


def genome_from_bytes(blob: bytes) -> Genome:
    if len(blob) < _HEADER.size:
        raise ValueError("truncated genome blob")
    inputs, hidden, outputs = _HEADER.unpack_from(blob)
    dims = NetworkDims(inputs=inputs, hidden=hidden, outputs=outputs)
    body = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    if body.shape != (dims.param_count,):
        raise ValueError(
            f"genome blob carries {body.size} parameters, dims require {dims.param_count}"
        )
    return Genome(dims, body.astype(np.float64))


def save_genome(genome: Genome, path):
    with open(path, "wb") as fh:
        fh.write(genome_to_bytes(genome))


def load_genome(path) -> Genome:
    with open(path, "rb") as fh:
        return genome_from_bytes(fh.read())
