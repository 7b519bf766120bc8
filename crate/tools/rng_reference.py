"""Independent reference for the counter-based RNG pipeline (SplitMix64 + Box-Muller).

Prints the first draws used to freeze oracle values in the Rust tests.
"""
import math

M = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix64(z):
    z &= M
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
    return z ^ (z >> 31)


class CounterRng:
    def __init__(self, seed, stream):
        self.key = mix64(seed ^ mix64((stream + GAMMA) & M))
        self.counter = 0
        self.spare = None

    def next_u64(self):
        self.counter += 1
        return mix64((self.key + self.counter * GAMMA) & M)

    def uniform(self):
        return ((self.next_u64() >> 11) + 0.5) / 2.0**53

    def normal(self):
        if self.spare is not None:
            z, self.spare = self.spare, None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self.spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)


if __name__ == "__main__":
    rng = CounterRng(42, 0)
    print("u64[0..3]", [rng.next_u64() for _ in range(3)])
    rng = CounterRng(42, 0)
    v = 0.0
    out = []
    for _ in range(3):
        v += 0.1 * rng.normal()
        out.append(v)
    print("walk", [repr(x) for x in out])
