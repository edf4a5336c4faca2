import numpy as np
import pytest
from hypothesis import strategies as st

from ood_sentinel.recipe import Add, Append, Term, TermKind

term_strategy = st.builds(
    Term,
    kind=st.sampled_from(list(TermKind)),
    factor=st.integers(min_value=1, max_value=9),
)
add_strategy = st.lists(term_strategy, min_size=2, max_size=4).map(
    lambda children: Add(tuple(children))
)
append_strategy = st.lists(
    st.one_of(term_strategy, add_strategy), min_size=2, max_size=4
).map(lambda children: Append(tuple(children)))
recipe_strategy = st.one_of(term_strategy, add_strategy, append_strategy)


def nonzero_vector(dim_min=1, dim_max=8, magnitude=1e3):
    return (
        st.lists(
            st.floats(-magnitude, magnitude, allow_nan=False, width=64),
            min_size=dim_min,
            max_size=dim_max,
        )
        .map(lambda xs: np.asarray(xs, dtype=np.float64))
        .filter(lambda v: np.linalg.norm(v) > 1e-6)
    )


@pytest.fixture
def gaussian_cluster():
    """Isotropic Gaussian iD cluster away from the origin, float32-safe."""

    def make(count=2000, dim=32, spread=0.5, seed=0):
        rng = np.random.default_rng(seed)
        center = np.zeros(dim)
        center[0] = 4.0
        return center + spread * rng.standard_normal((count, dim))

    return make
