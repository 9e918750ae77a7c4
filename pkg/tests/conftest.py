"""Shared hypothesis strategies for jets and symmetric matrices."""
import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jetpot.jets import Jet

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


@st.composite
def sym_matrices(draw, n=None, low=2, high=4):
    n = draw(st.integers(low, high)) if n is None else n
    M = draw(arrays(np.float64, (n, n), elements=finite))
    return 0.5 * (M + M.T)


@st.composite
def jets(draw, n=None, low=2, high=4):
    n = draw(st.integers(low, high)) if n is None else n
    r = draw(finite)
    p = draw(arrays(np.float64, (n,), elements=finite))
    A = draw(sym_matrices(n=n))
    return Jet(r, p, A)


@st.composite
def jet_pairs(draw, low=2, high=4):
    n = draw(st.integers(low, high))
    return draw(jets(n=n)), draw(jets(n=n))
