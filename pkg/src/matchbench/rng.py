"""Counter-style random streams shared by the Python and compiled kernels.

Every random choice in the library goes through :class:`RngStream`, a
xoshiro256** generator seeded through SplitMix64.  The compiled kernels
implement the exact same recurrences, so a trial run with either backend
draws an identical sequence and produces a bitwise identical result.
"""

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Labels of the two independent streams used by RSD*.
ORDER_STREAM = 1
RANK_STREAM = 2


def mix64(z):
    """SplitMix64 finalizer."""
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed, label):
    """Seed of the sub-stream identified by ``label`` under ``seed``.

    Both arguments are reduced modulo 2**64.
    """
    base = mix64(seed & MASK64)
    return mix64((base + ((label + 1) & MASK64) * GOLDEN_GAMMA) & MASK64)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class RngStream:
    """Deterministic random stream.

    Attributes
    ----------
    seed : int
        64-bit seed the stream was created from.
    position : int
        Number of 64-bit words drawn so far.
    """

    __slots__ = ("seed", "position", "_s0", "_s1", "_s2", "_s3")

    def __init__(self, seed=0):
        self.seed = seed & MASK64
        self.position = 0
        x = self.seed
        words = []
        for _ in range(4):
            x = (x + GOLDEN_GAMMA) & MASK64
            words.append(mix64(x))
        self._s0, self._s1, self._s2, self._s3 = words

    def __repr__(self):
        return f"RngStream(seed={self.seed}, position={self.position})"

    def substream(self, label):
        """Independent stream derived from ``(seed, label)``; ignores position."""
        return RngStream(derive_seed(self.seed, label))

    def next_u64(self):
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        self.position += 1
        return result

    def randbelow(self, m):
        """Uniform integer in ``[0, m)`` by rejection of the biased low range."""
        if m <= 0:
            raise ValueError("randbelow needs m >= 1")
        threshold = (MASK64 + 1 - m) % m
        while True:
            x = self.next_u64()
            if x >= threshold:
                return x % m

    def random(self):
        """Uniform float in ``[0, 1)`` with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def shuffle(self, seq):
        """Fisher-Yates shuffle in place, walking from the last slot down."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randbelow(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def permutation(self, n):
        perm = list(range(n))
        self.shuffle(perm)
        return perm

    def sorted_sample(self, population, k):
        """Sorted uniform ``k``-subset of ``range(population)``.

        Draws ``randbelow(population)`` until ``k`` distinct values have been
        seen; the compiled kernels consume the stream the same way.
        """
        if k > population:
            raise ValueError("sample larger than population")
        seen = set()
        while len(seen) < k:
            seen.add(self.randbelow(population))
        return sorted(seen)


def trial_stream(seed, trial):
    """Stream used by Monte Carlo trial number ``trial`` of a run seeded ``seed``."""
    return RngStream(derive_seed(seed, trial))
