import numpy as np
import pytest

from flatchain import BoxDomain, make_int_group
from flatchain.chains import canonicalize


@pytest.fixture
def unit_box():
    return BoxDomain((0.0, 0.0), (1.0, 1.0))


@pytest.fixture
def z_linear():
    return make_int_group(1.0, 1.0)


def random_chain(rng, domain, group, max_atoms=6, coeff_range=(-3, 3),
                 margin=0.01):
    """Seeded random canonical chain with interior atoms."""
    n = rng.integers(1, max_atoms + 1)
    lo = np.asarray(domain.lo)
    hi = np.asarray(domain.hi)
    atoms = []
    for _ in range(n):
        x = tuple(lo + margin + rng.random(domain.dim)
                  * (hi - lo - 2 * margin))
        c = 0
        while c == 0:
            c = int(rng.integers(coeff_range[0], coeff_range[1] + 1))
        atoms.append((x, c))
    return canonicalize(atoms, domain, group)
