import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from germcalc import DistGerm, Germ
from germcalc.germs import Window


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def box(scaling, eps, half, d=None):
    d = d or scaling.d
    return Window(scaling, eps, (-half,) * d, (half,) * d)


def random_germ(rng, scaling, eps=1.0, half=4, cls=Germ, complex_values=False):
    w = box(scaling, eps, half)
    vals = rng.standard_normal((w.npoints, w.npoints))
    if complex_values:
        vals = vals + 1j * rng.standard_normal(vals.shape)
    return cls(w, w, vals)


def germ_restricted(U, half):
    """Sub-germ over the concentric window of the given half-width."""
    scaling = U.scaling
    small = Window(scaling, U.eps, (-half,) * scaling.d, (half,) * scaling.d)
    bsel = [i for i, idx in enumerate(U.base.indices()) if small.contains(idx)]
    asel = [i for i, idx in enumerate(U.active.indices()) if small.contains(idx)]
    vals = U.values[np.ix_(bsel, asel)]
    return type(U)(small, small, vals)
