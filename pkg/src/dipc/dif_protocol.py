"""Three-phase identification protocol over the noiseless feedback link.

Phase 1 turns channel noise into shared randomness: the encoder transmits a
periodic pilot (peak release, then silence for the memory length), and the
receiver's per-block counts, fed back noiselessly, become a random string
known to both sides.  A letter-typicality filter keeps only statistically
regular strings, making the shared randomness near uniform.  Phase 2 conveys
the message through that randomness: both sides hash (message, shared
string) into a small range M, and the encoder transmits the hash value with
a short peak/silence transmission code decoded by exact maximum likelihood.
The verifier accepts a candidate message iff the string is typical and the
decoded hash matches the candidate's.  Wrong messages then collide with
probability about 1/M, so Type II errors are paid for by hash range rather
than block length, which is what lifts the code size to the
double-exponential scale.

Cross-phase interference is modeled exactly: intensities come from the
concatenated pilot + transmission input, so a truncated final pilot block
leaks into the phase-2 window just as the channel law dictates.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channel import ChannelParams, PowerConstraints, effective_intensity
from .errors import ConstructionError
from .measures import poisson_entropy_exact, poisson_pmf_truncated
from .results import ErrorEstimate, SimResult
from .seeding import spawn

DEFAULT_TAIL_MASS = 1e-12

# Finite-sample slack (in binomial sigmas) added to the typicality tolerance;
# vanishes as the block count grows, leaving the pure letter-typicality test.
TYPICALITY_GUARD_SIGMAS = 4.0


def letter_laws(params: ChannelParams, peak: float) -> np.ndarray:
    """Poisson means seen at each in-block position during the pilot phase."""
    return params.hit_probs * peak * params.slot_duration + params.dark_rate


@dataclass(frozen=True)
class PilotSpec:
    """Phase-1 pilot: (peak, 0, ..., 0) blocks of length memory+1."""

    n: int
    memory: int
    amplitude: float
    block_count: int

    @property
    def full_block_count(self) -> int:
        return self.n // (self.memory + 1)

    def input_sequence(self) -> np.ndarray:
        period = self.memory + 1
        block = np.zeros(period)
        block[0] = self.amplitude
        return np.tile(block, self.block_count)[: self.n]


def build_pilot(n: int, params: ChannelParams, peak: float) -> PilotSpec:
    """Pilot covering n slots; a trailing partial block is truncated."""
    if peak <= 0:
        raise ValueError("pilot amplitude must be positive")
    if n < 1:
        raise ValueError("phase-1 length must be positive")
    period = params.memory + 1
    return PilotSpec(n=n, memory=params.memory, amplitude=peak,
                     block_count=math.ceil(n / period))


def blockize(y, memory: int) -> np.ndarray:
    """Split phase-1 outputs into consecutive (memory+1)-blocks, dropping a
    trailing partial block."""
    y = np.asarray(y)
    period = memory + 1
    full = y.size // period
    return y[: full * period].reshape(full, period)


@dataclass(frozen=True)
class TypicalSetSpec:
    """Letter-typicality test parameters for the pilot's block law."""

    eps: float
    letter_laws: np.ndarray
    tail_mass: float
    block_count: int

    def __post_init__(self):
        object.__setattr__(self, "letter_laws", np.asarray(self.letter_laws, dtype=float))
        if self.eps <= 0:
            raise ValueError("typicality slack must be positive")
        if self.block_count < 1:
            raise ValueError("block count must be positive")

    @classmethod
    def from_channel(cls, params: ChannelParams, peak: float, eps: float,
                     block_count: int, tail_mass: float = DEFAULT_TAIL_MASS):
        return cls(eps=eps, letter_laws=letter_laws(params, peak),
                   tail_mass=tail_mass, block_count=block_count)

    @cached_property
    def _tables(self):
        """Per position: (y_max, extended pmf incl. overflow bucket)."""
        tables = []
        for law in self.letter_laws:
            dist = poisson_pmf_truncated(float(law), self.tail_mass) if law > 0 else None
            if dist is None:
                pmf = np.array([1.0, 0.0])
                y_max = 0
            else:
                pmf = np.append(dist.mass, dist.tail_bound)
                y_max = int(dist.support[-1])
            tables.append((y_max, pmf))
        return tables


def typical_test(blocks, spec: TypicalSetSpec) -> bool:
    """Letter typicality: at each in-block position the empirical frequency
    of every value must stay within eps*pmf + eps/|support| of the Poisson
    pmf, plus a finite-sample allowance that shrinks with the block count.

    Counts beyond the truncated support share a single overflow bucket whose
    target mass is the recorded tail bound.
    """
    blocks = np.asarray(blocks)
    if blocks.ndim != 2 or blocks.shape[1] != spec.letter_laws.size:
        raise ValueError(
            f"blocks must be 2-D with {spec.letter_laws.size} columns, got {blocks.shape}"
        )
    if not math.isfinite(spec.eps):
        return True
    count = blocks.shape[0]
    if count == 0:
        raise ValueError("need at least one block")
    for k, (y_max, pmf) in enumerate(spec._tables):
        values = np.minimum(blocks[:, k], y_max + 1)
        freq = np.bincount(values, minlength=y_max + 2) / count
        support_size = y_max + 1
        slack = TYPICALITY_GUARD_SIGMAS * np.sqrt(pmf * (1.0 - pmf) / count)
        tol = spec.eps * pmf + spec.eps / support_size + slack
        if np.any(np.abs(freq - pmf) > tol):
            return False
    return True


def typical_log_size(n: int, spec: TypicalSetSpec) -> float:
    """Asymptotic typical-set size exponent in bits:
    ceil(n/(memory+1)) times the summed per-position Poisson entropies."""
    period = spec.letter_laws.size
    blocks = math.ceil(n / period)
    return blocks * sum(poisson_entropy_exact(float(law), spec.tail_mass)
                        for law in spec.letter_laws)


@dataclass(frozen=True)
class HashFamily:
    """Keyed hash family standing in for ideal uniform random maps.

    Each message index keys a pseudorandom function from block strings to
    [1, hash_range]; both parties evaluate it on the shared phase-1 string.
    """

    master_seed: int
    num_messages: int
    hash_range: int

    def __post_init__(self):
        if not 1 <= self.hash_range <= self.num_messages:
            raise ValueError("need 1 <= hash_range <= num_messages")


def _canonical_block_bytes(blocks: np.ndarray) -> bytes:
    blocks = np.ascontiguousarray(blocks, dtype="<u8")
    return blocks.shape[0].to_bytes(8, "little") + blocks.shape[1].to_bytes(8, "little") \
        + blocks.tobytes()


def hash_message(index: int, blocks, family: HashFamily) -> int:
    """Hash value in [1, hash_range] for (message, shared block string)."""
    if not 0 <= index < family.num_messages:
        raise IndexError(f"message index {index} outside [0, {family.num_messages})")
    blocks = np.asarray(blocks)
    h = hashlib.blake2b(digest_size=16,
                        key=int(family.master_seed).to_bytes(16, "little", signed=True))
    h.update(int(index).to_bytes(16, "little"))
    h.update(_canonical_block_bytes(blocks))
    return 1 + int.from_bytes(h.digest(), "little") % family.hash_range


@dataclass(frozen=True)
class InnerCode:
    """Short transmission code for the hash value: distinct peak/silence
    patterns decoded by exact maximum likelihood over the full ISI window."""

    length: int
    amplitude: float
    codewords: np.ndarray
    params: ChannelParams

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @cached_property
    def window_intensities(self) -> np.ndarray:
        """Standalone decode intensities, shape (M, length + memory)."""
        return np.stack([effective_intensity(c, self.params) for c in self.codewords])


def build_inner_code(n: int, hash_range: int, params: ChannelParams,
                     peak: float, seed: int) -> InnerCode:
    """Draw ``hash_range`` distinct balanced on-off codewords of length
    ceil(sqrt(n)); falls back to unbalanced patterns if the balanced pool is
    too small."""
    if hash_range < 1:
        raise ValueError("hash range must be positive")
    length = math.ceil(math.sqrt(n))
    if hash_range > 2 ** length:
        raise ValueError(
            f"hash range {hash_range} exceeds the 2^{length} distinct binary patterns"
        )
    rng = spawn(seed, "inner")
    ones = length // 2
    patterns: list[bytes] = []
    seen = set()
    balanced_pool = math.comb(length, ones)
    attempts = 0
    while len(patterns) < hash_range:
        attempts += 1
        if attempts > 200 * hash_range + 64:
            raise ConstructionError("could not sample enough distinct inner codewords")
        bits = np.zeros(length, dtype=np.int8)
        if len(seen) < balanced_pool:
            bits[rng.choice(length, size=ones, replace=False)] = 1
        else:
            bits = rng.integers(0, 2, size=length).astype(np.int8)
        key = bits.tobytes()
        if key in seen:
            continue
        seen.add(key)
        patterns.append(bits)
    codewords = np.stack(patterns).astype(float) * peak
    return InnerCode(length=length, amplitude=peak, codewords=codewords, params=params)


def _ml_decode(y_window: np.ndarray, intensities: np.ndarray) -> int:
    """Most likely codeword row index (0-based) for one output window."""
    y = np.asarray(y_window, dtype=float)
    with np.errstate(divide="ignore"):
        log_mu = np.log(intensities)
    terms = np.where(y[None, :] > 0, y[None, :] * log_mu, 0.0)
    scores = terms.sum(axis=1) - intensities.sum(axis=1)
    return int(np.argmax(scores))


def inner_decode(code: InnerCode, y_window, base_intensity=None) -> int:
    """ML-decode an output window to a hash value in [1, size].

    ``base_intensity`` adds known interference (e.g. a pilot tail) on top of
    each codeword's own intensity; the dark rate is already included once.
    """
    mu = code.window_intensities
    if base_intensity is not None:
        mu = mu + np.asarray(base_intensity, dtype=float)
    return _ml_decode(np.asarray(y_window), mu) + 1


@dataclass(frozen=True)
class DIFCode:
    """The composed feedback code: pilot, typicality filter, hash family and
    inner transmission code over one channel."""

    pilot: PilotSpec
    typ: TypicalSetSpec
    hashes: HashFamily
    inner: InnerCode
    params: ChannelParams

    @property
    def n(self) -> int:
        return self.pilot.n

    @property
    def total_input_length(self) -> int:
        return self.n + self.inner.length

    @property
    def output_length(self) -> int:
        return self.total_input_length + self.params.memory

    @cached_property
    def phase1_intensity(self) -> np.ndarray:
        """Intensity of the first n slots (pilot only reaches them)."""
        return effective_intensity(self.pilot.input_sequence(), self.params)[: self.n]

    @cached_property
    def phase2_intensities(self) -> np.ndarray:
        """Per hash value, intensity of slots n+1 .. m+K under the
        concatenated pilot + codeword input.  Shape (M, length + memory)."""
        pilot_x = self.pilot.input_sequence()
        rows = []
        for c in self.inner.codewords:
            mu = effective_intensity(np.concatenate([pilot_x, c]), self.params)
            rows.append(mu[self.n :])
        return np.stack(rows)


def build_dif_code(
    n: int,
    params: ChannelParams,
    peak: float,
    num_messages: int,
    hash_range: int | None = None,
    type2_budget: float | None = None,
    eps: float = 0.2,
    constraints: PowerConstraints | None = None,
    seed: int = 0,
    tail_mass: float = DEFAULT_TAIL_MASS,
) -> DIFCode:
    """Assemble the three-phase code.

    When ``hash_range`` is omitted it defaults to the next power of two of
    2/type2_budget, so hash collisions spend half the Type II budget and the
    inner code the rest.  If ``constraints`` are given, the combined
    pilot + worst-case inner sequence is checked against the average budget.
    """
    if hash_range is None:
        if type2_budget is None:
            raise ValueError("need hash_range or type2_budget to size the hash family")
        if not 0 < type2_budget < 1:
            raise ValueError("type2_budget must lie in (0, 1)")
        hash_range = 2 ** math.ceil(math.log2(2.0 / type2_budget))
    pilot = build_pilot(n, params, peak)
    typ = TypicalSetSpec.from_channel(params, peak, eps,
                                      block_count=pilot.full_block_count,
                                      tail_mass=tail_mass)
    hashes = HashFamily(master_seed=seed, num_messages=num_messages,
                        hash_range=hash_range)
    inner = build_inner_code(n, hash_range, params, peak, seed)
    code = DIFCode(pilot=pilot, typ=typ, hashes=hashes, inner=inner, params=params)
    if constraints is not None:
        if peak > constraints.peak:
            raise ValueError("pilot amplitude exceeds the peak constraint")
        worst = pilot.block_count * peak + float(code.inner.codewords.sum(axis=1).max())
        budget = code.total_input_length * constraints.average
        if worst > budget + 1e-9:
            raise ValueError(
                f"combined sequence releases {worst}, above the average budget {budget}"
            )
    return code


@dataclass(frozen=True)
class DIFTranscript:
    """Audit record of one protocol run."""

    message: int
    blocks: np.ndarray
    typical: bool
    hash_value: int
    seed: int


def _encode_with_rngs(index: int, code: DIFCode, rng_phase1, rng_phase2):
    y1 = rng_phase1.poisson(code.phase1_intensity)
    blocks = blockize(y1, code.params.memory)
    typical = typical_test(blocks, code.typ)
    value = hash_message(index, blocks, code.hashes)
    y2 = rng_phase2.poisson(code.phase2_intensities[value - 1])
    return np.concatenate([y1, y2]), blocks, typical, value


def dif_encode(index: int, code: DIFCode, seed: int):
    """Run the encoder side once: pilot through the channel, feedback, hash,
    inner transmission.  Returns the full output record (length m + memory)
    and a transcript; an atypical string is recorded, not raised."""
    if not 0 <= index < code.hashes.num_messages:
        raise IndexError(f"message index {index} outside [0, {code.hashes.num_messages})")
    y, blocks, typical, value = _encode_with_rngs(
        index, code, spawn(seed, "phase1"), spawn(seed, "phase2")
    )
    return y, DIFTranscript(message=index, blocks=blocks, typical=typical,
                            hash_value=value, seed=seed)


def dif_identify(index: int, y, code: DIFCode) -> bool:
    """Verifier for "was message ``index`` sent?": reject atypical strings,
    otherwise ML-decode the phase-2 window and compare hash values."""
    y = np.asarray(y)
    if y.ndim != 1 or y.size != code.output_length:
        raise ValueError(f"output length must be {code.output_length}, got {y.size}")
    blocks = blockize(y[: code.n], code.params.memory)
    if not typical_test(blocks, code.typ):
        return False
    decoded = _ml_decode(y[code.n :], code.phase2_intensities) + 1
    return decoded == hash_message(index, blocks, code.hashes)


def estimate_dif_errors(code: DIFCode, message_pairs, trials: int, seed: int) -> SimResult:
    """Monte Carlo protocol errors over ordered (sent, tested) pairs.

    Type I for each distinct sender: rejection of the true message
    (atypicality plus inner decoding failure).  Type II per pair: acceptance
    of the wrong message.  Per-trial streams are derived from
    (seed, sender, trial), so results are schedule-independent.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    pairs = [(int(i), int(j)) for i, j in message_pairs]
    if any(i == j for i, j in pairs):
        raise ValueError("Type II pairs must have distinct messages")
    tested_by_sender: dict[int, list[int]] = {}
    for i, j in pairs:
        tested_by_sender.setdefault(i, []).append(j)

    type1: dict[int, ErrorEstimate] = {}
    type2: dict[tuple[int, int], ErrorEstimate] = {}
    atypical_total = 0
    for sender in sorted(tested_by_sender):
        rejects = 0
        accepts = {j: 0 for j in tested_by_sender[sender]}
        for t in range(trials):
            y, blocks, typical, sent_value = _encode_with_rngs(
                sender, code,
                spawn(seed, "dif", sender, t, "p1"),
                spawn(seed, "dif", sender, t, "p2"),
            )
            if not typical:
                atypical_total += 1
                rejects += 1
                continue
            decoded = _ml_decode(y[code.n :], code.phase2_intensities) + 1
            if decoded != sent_value:
                rejects += 1
            for j in accepts:
                if decoded == hash_message(j, blocks, code.hashes):
                    accepts[j] += 1
        type1[sender] = ErrorEstimate(rejects, trials)
        for j, k in accepts.items():
            type2[(sender, j)] = ErrorEstimate(k, trials)

    return SimResult(
        kind="dif-sim",
        type1=type1,
        type2=type2,
        trials=trials,
        seed=seed,
        extras={"atypical": atypical_total},
    )


def estimate_inner_error(code: DIFCode, trials: int, seed: int) -> ErrorEstimate:
    """Measured decoding error of the inner code inside the protocol window
    (uniform hash values, pilot-tail interference included)."""
    if trials < 1:
        raise ValueError("trials must be positive")
    errors = 0
    size = code.inner.size
    for t in range(trials):
        rng = spawn(seed, "inner-error", t)
        value = int(rng.integers(size)) + 1
        y2 = rng.poisson(code.phase2_intensities[value - 1])
        if _ml_decode(y2, code.phase2_intensities) + 1 != value:
            errors += 1
    return ErrorEstimate(errors, trials)


def collision_bound_check(num_messages: int, hash_range: int, type2_budget: float,
                          log_size_bits: float) -> bool:
    """Feasibility of the union bound over hash collisions.

    True iff (N-1) * 2^(-S * (type2 * log2(M) - 1)) < 1 with S = 2^log_size_bits,
    evaluated in log space.  Requires 1/M < type2.
    """
    if 1.0 / hash_range >= type2_budget:
        raise ValueError("need hash collisions rarer than the Type II budget: 1/M < budget")
    if num_messages <= 1:
        return True
    set_size = math.inf if log_size_bits > 1023 else 2.0 ** log_size_bits
    factor = type2_budget * math.log2(hash_range) - 1.0
    if factor <= 0:
        return False
    threshold = set_size * factor
    if math.isinf(threshold):
        return True
    # Exact at the boundary: 2^(bits-1) <= N-1 < 2^bits.
    bits = (num_messages - 1).bit_length()
    if bits <= threshold:
        return True
    if bits - 1 >= threshold:
        return False
    return math.log2(num_messages - 1) < threshold


def max_messages_log_log(n: int, params: ChannelParams, peak: float) -> float:
    """log2 log2 of the largest feasible message count:
    n/(memory+1) times the summed per-position pilot-law entropies (bits)."""
    if n < 1:
        raise ValueError("phase-1 length must be positive")
    laws = letter_laws(params, peak)
    return n / (params.memory + 1) * sum(poisson_entropy_exact(float(law)) for law in laws)


def dif_rate(log_log_bits: float, n: int) -> float:
    """Feedback identification rate log2 log2(N) / n."""
    if n < 1:
        raise ValueError("block length must be positive")
    return log_log_bits / n
