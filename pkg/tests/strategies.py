import numpy as np
from hypothesis import strategies as st


def complex_matrices(min_side=1, max_side=5, scale=10.0):
    """Random complex matrices from a hypothesis-drawn seed and shape."""

    @st.composite
    def build(draw):
        m = draw(st.integers(min_side, max_side))
        n = draw(st.integers(min_side, max_side))
        seed = draw(st.integers(0, 2**32 - 1))
        rng = np.random.default_rng(seed)
        s = draw(st.floats(1e-3, scale))
        return s * (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))

    return build()


def coord_stacks(max_d=4, max_n=4):
    @st.composite
    def build(draw):
        d = draw(st.integers(1, max_d))
        n = draw(st.integers(1, max_n))
        rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
        return rng.standard_normal((d, n, n)) + 1j * rng.standard_normal((d, n, n))

    return build()
