import sys
from pathlib import Path

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from freearr.arrangement import Arrangement, canonicalize  # noqa: E402

settings.register_profile(
    "repro",
    derandomize=True,
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repro")


@st.composite
def arrangements(draw, min_dim=1, max_dim=4, max_size=8, coeff=3, min_size=0):
    """Random central arrangements with small integer normals."""
    dim = draw(st.integers(min_dim, max_dim))
    vecs = draw(st.lists(st.lists(st.integers(-coeff, coeff), min_size=dim, max_size=dim)
                         .filter(any), min_size=min_size, max_size=max_size))
    seen = []
    for v in vecs:
        h = canonicalize(v)
        if h not in seen:
            seen.append(h)
    return Arrangement(dim, tuple(seen))


@st.composite
def nonempty_arrangements(draw, **kw):
    A = draw(arrangements(**kw))
    if not len(A):
        A = Arrangement(A.dim, (tuple([1] + [0] * (A.dim - 1)),))
    return A
