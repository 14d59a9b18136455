"""Stream determinism against an independent pure-Python reference."""

import numpy as np

from qchaos.rng import Stream

MASK32 = 0xFFFFFFFF


def philox_reference(seed: int, counter: int) -> int:
    """Scalar big-int Philox4x32-10, no numpy."""
    c = [counter & MASK32, (counter >> 32) & MASK32, 0, 0]
    k0, k1 = seed & MASK32, (seed >> 32) & MASK32
    for _ in range(10):
        p0 = 0xD2511F53 * c[0]
        p1 = 0xCD9E8D57 * c[2]
        c = [
            ((p1 >> 32) & MASK32) ^ c[1] ^ k0,
            p1 & MASK32,
            ((p0 >> 32) & MASK32) ^ c[3] ^ k1,
            p0 & MASK32,
        ]
        k0 = (k0 + 0x9E3779B9) & MASK32
        k1 = (k1 + 0xBB67AE85) & MASK32
    return (c[1] << 32) | c[0]


def test_matches_pure_python_reference():
    for seed in (0, 1, 42, 0xDEADBEEF, (1 << 64) - 1):
        stream = Stream(seed)
        got = [stream.next_u64() for _ in range(50)]
        assert got == [philox_reference(seed, k) for k in range(50)]


def test_block_equals_scalar_draws():
    a, b = Stream(7), Stream(7)
    block = a.uniform_block(100)
    singles = np.array([b.uniform() for _ in range(100)])
    assert np.array_equal(block, singles)


def test_uniform_range_and_mean():
    u = Stream(3).uniform_block(20000, -2.0, 2.0)
    assert u.min() >= -2.0 and u.max() < 2.0
    assert abs(u.mean()) < 0.05


def test_spawn_streams_differ():
    base = Stream(9)
    children = [base.spawn(k).next_u64() for k in range(10)]
    assert len(set(children)) == 10
    assert Stream(9).spawn(3).next_u64() == children[3]
    # spawning does not disturb the draw counter
    assert base.count == 0
