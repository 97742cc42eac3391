"""Two constructions of type-B braid group representations from sl2 data.

``modrep``/``braid`` build the representation from the quantum group R, K
and E matrices, ``abrr`` solves for the dynamical twist and assembles the
quasi-reflection representation, ``kz`` produces the analytic counterpart
from regularized KZ holonomies, and ``uqsl2`` is a symbolic rank-one oracle
for the twist.  Exact arithmetic lives in ``coeff``.
"""

__version__ = "0.1.0"
