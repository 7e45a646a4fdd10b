"""Session-key generation with a small genetic algorithm.

Pipeline: an LCG seeds a population of fixed-width bit strings, which is
evolved by generation-parity pairing, single-point crossover and single-bit
mutation. Every chromosome of every generation is reduced to its digital root,
those digits are added to the password's ASCII codes, and the first 8 mixed
bytes are expanded nibble by nibble into a 128-bit IDEA key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

KEY_SOURCE_BYTES = 8
MIN_PASSWORD = 8

# Knuth's MMIX constants; any parameters satisfying the LcgParams ranges work.
DEFAULT_A = 6364136223846793005
DEFAULT_C = 1442695040888963407
DEFAULT_M = 1 << 64
DEFAULT_POPULATION = 10
DEFAULT_WIDTH = 128
DEFAULT_GENERATIONS = 10
DEFAULT_LOCUS = 4

LCG_LOCUS = "lcg"
LocusPolicy = Union[int, str]


class KeygenError(ValueError):
    pass


@dataclass(frozen=True)
class LcgParams:
    a: int
    c: int
    m: int
    seed: int

    def __post_init__(self) -> None:
        if self.m <= 0:
            raise KeygenError("LCG modulus must be positive")
        if not 0 <= self.a < self.m:
            raise KeygenError("LCG multiplier must satisfy 0 <= a < m")
        if not 0 <= self.c < self.m:
            raise KeygenError("LCG increment must satisfy 0 <= c < m")
        if self.seed < 0:
            raise KeygenError("LCG seed must be non-negative")

    @property
    def output_bits(self) -> int:
        return max(1, (self.m - 1).bit_length())


def lcg_next(x: int, p: LcgParams) -> int:
    return (p.a * x + p.c) % p.m


class LcgStream:
    """Yields the seed (reduced mod m) first, then successive LCG states."""

    def __init__(self, params: LcgParams) -> None:
        self.params = params
        self._x = params.seed % params.m
        self._primed = False

    def __iter__(self) -> Iterator[int]:
        return self

    def __next__(self) -> int:
        if self._primed:
            self._x = lcg_next(self._x, self.params)
        self._primed = True
        return self._x

    def bits(self, width: int) -> int:
        """Concatenate whole outputs MSB-first and keep the leading `width` bits."""
        step = self.params.output_bits
        acc, have = 0, 0
        while have < width:
            acc = (acc << step) | next(self)
            have += step
        return acc >> (have - width)


@dataclass
class Population:
    chromosomes: list[int]
    width: int
    generation_number: int = 1

    def __len__(self) -> int:
        return len(self.chromosomes)


def _seed_from_stream(stream: LcgStream, n: int, w: int) -> Population:
    if n < 1:
        raise KeygenError("population size must be at least 1")
    if w < 2:
        raise KeygenError("chromosome width must be at least 2 bits")
    return Population([stream.bits(w) for _ in range(n)], w, 1)


def seed_population(p: LcgParams, n: int = DEFAULT_POPULATION, w: int = DEFAULT_WIDTH) -> Population:
    return _seed_from_stream(LcgStream(p), n, w)


def pair_indices(generation_number: int, n: int) -> list[tuple[int, int]]:
    """Crossover pairs: top-down on even generations, bottom-up on odd ones.

    With odd n the unpaired chromosome (last on even, first on odd) passes through.
    """
    if n < 2:
        raise KeygenError("population of fewer than 2 chromosomes cannot be paired")
    if generation_number % 2 == 0:
        return [(i, i + 1) for i in range(0, n - 1, 2)]
    return [(i, i - 1) for i in range(n - 1, 0, -2)]


def _check_locus(locus: int, upper: int) -> None:
    if not 1 <= locus <= upper:
        raise KeygenError(f"locus {locus} outside 1..{upper}")


def crossover(p1: int, p2: int, locus: int, width: int) -> tuple[int, int]:
    """Single-point crossover after `locus` bits (1-based from the MSB)."""
    _check_locus(locus, width - 1)
    tail = (1 << (width - locus)) - 1
    head = ((1 << width) - 1) ^ tail
    return (p1 & head) | (p2 & tail), (p2 & head) | (p1 & tail)


def mutate(c: int, locus: int, width: int) -> int:
    _check_locus(locus, width)
    return c ^ (1 << (width - locus))


def fitness(c: int, width: int) -> float:
    """Bit balance score: 1.0 for half ones, 0.0 for all zeros or all ones."""
    ones = bin(c).count("1")
    return 1.0 - abs(ones / width - 0.5) * 2


def _next_generation(
    pop: Population, stream: LcgStream, locus_policy: LocusPolicy, selection: bool
) -> Population:
    gen = pop.generation_number + 1
    w = pop.width
    children = list(pop.chromosomes)
    for i, j in pair_indices(gen, len(pop)):
        if locus_policy == LCG_LOCUS:
            locus = 1 + next(stream) % (w - 1)
        else:
            locus = int(locus_policy)
        a, b = crossover(pop.chromosomes[i], pop.chromosomes[j], locus, w)
        children[i] = mutate(a, locus, w)
        children[j] = mutate(b, locus, w)
    if selection:
        pool = pop.chromosomes + children
        # stable sort keeps parents ahead of children on ties
        children = sorted(pool, key=lambda c: -fitness(c, w))[: len(pop)]
    return Population(children, w, gen)


def evolve(
    p: LcgParams,
    n: int = DEFAULT_POPULATION,
    w: int = DEFAULT_WIDTH,
    generations: int = DEFAULT_GENERATIONS,
    locus_policy: LocusPolicy = LCG_LOCUS,
    *,
    selection: bool = False,
    initial: Sequence[int] | None = None,
) -> list[int]:
    """Run the GA and return the genetic array: every generation, in order.

    `initial` replaces the LCG-seeded first generation (the stream still
    drives LCG locus draws).
    """
    if generations < 1:
        raise KeygenError("need at least one generation")
    if locus_policy != LCG_LOCUS:
        _check_locus(int(locus_policy), w - 1)
    stream = LcgStream(p)
    if initial is None:
        pop = _seed_from_stream(stream, n, w)
    else:
        if any(not 0 <= c < 1 << w for c in initial):
            raise KeygenError(f"initial chromosomes must fit in {w} bits")
        pop = Population(list(initial), w, 1)
    if generations > 1 and len(pop) < 2:
        raise KeygenError("population of fewer than 2 chromosomes cannot be paired")
    genetic_array = list(pop.chromosomes)
    for _ in range(generations - 1):
        pop = _next_generation(pop, stream, locus_policy, selection)
        genetic_array.extend(pop.chromosomes)
    return genetic_array


def digital_root(v: int) -> int:
    """Repeated decimal digit sum down to one digit (2365 -> 16 -> 7)."""
    if v < 0:
        raise KeygenError("digital root is defined for non-negative integers")
    while v > 9:
        v = sum(int(d) for d in str(v))
    return v


def coded_array(genetic_array: Sequence[int]) -> list[int]:
    return [digital_root(v) for v in genetic_array]


def mix_password(password: bytes | str, coded: Sequence[int]) -> bytes:
    """Add coded digits to the password's ASCII codes, cycling through `coded`."""
    if isinstance(password, str):
        try:
            password = password.encode("ascii")
        except UnicodeEncodeError:
            raise KeygenError("password must be printable ASCII") from None
    if len(password) < MIN_PASSWORD:
        raise KeygenError(f"password must be at least {MIN_PASSWORD} characters")
    if any(not 32 <= b <= 126 for b in password):
        raise KeygenError("password must be printable ASCII")
    if not coded:
        raise KeygenError("coded array is empty")
    if any(not 0 <= d <= 9 for d in coded):
        raise KeygenError("coded array entries must be single digits")
    return bytes(b + coded[i % len(coded)] for i, b in enumerate(password))


def expand_64_to_128(mixed: bytes) -> bytes:
    """Double 8 bytes to 16: each nibble v becomes the byte (v & 1) | (v >> 1) | 0000.

    High bit is the parity code, next three bits the 0-based rank of v within the
    even or odd series, low four bits zero padding. High nibble first.
    """
    if len(mixed) != KEY_SOURCE_BYTES:
        raise KeygenError(f"key expansion needs exactly {KEY_SOURCE_BYTES} bytes, got {len(mixed)}")
    out = bytearray()
    for b in mixed:
        for v in (b >> 4, b & 0x0F):
            out.append(((v & 1) << 7) | ((v >> 1) << 4))
    return bytes(out)


@dataclass
class GaSettings:
    """Everything besides the password that determines a session key."""

    params: LcgParams = field(default_factory=lambda: LcgParams(DEFAULT_A, DEFAULT_C, DEFAULT_M, 1))
    population: int = DEFAULT_POPULATION
    width: int = DEFAULT_WIDTH
    generations: int = DEFAULT_GENERATIONS
    locus_policy: LocusPolicy = LCG_LOCUS
    selection: bool = False
    initial: Sequence[int] | None = None


def key_from_coded(password: bytes | str, coded: Sequence[int]) -> bytes:
    mixed = mix_password(password, coded)
    return expand_64_to_128(mixed[:KEY_SOURCE_BYTES])


def generate_session_key(
    password: bytes | str,
    p: LcgParams,
    n: int = DEFAULT_POPULATION,
    w: int = DEFAULT_WIDTH,
    generations: int = DEFAULT_GENERATIONS,
    locus_policy: LocusPolicy = LCG_LOCUS,
    *,
    selection: bool = False,
    initial: Sequence[int] | None = None,
) -> bytes:
    genetic_array = evolve(
        p, n, w, generations, locus_policy, selection=selection, initial=initial
    )
    return key_from_coded(password, coded_array(genetic_array))


def session_key(password: bytes | str, settings: GaSettings) -> bytes:
    return generate_session_key(
        password,
        settings.params,
        settings.population,
        settings.width,
        settings.generations,
        settings.locus_policy,
        selection=settings.selection,
        initial=settings.initial,
    )
