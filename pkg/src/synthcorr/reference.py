"""Reference catalog expansions of the sixteen Liouville matrix units.

Each row lists the weights, in units of 1/4, on the catalog operations in
``catalog.LABELS`` order.  ``P_ab`` is the matrix with a single 1 at Liouville
row ``a`` and column ``b``.
"""

import numpy as np

_QUARTERS = {
    "P00": [-2, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    "P0x": [2, -1, -1, -1, -1, -1, -1, 0, 0, 0, 4, 0, 0, 4, 0, 0],
    "P0y": [2, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 4, 0, 0, 4, 0],
    "P0z": [2, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 4, 0, 0, 4],
    "Px0": [-2, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, -4, 0, 0],
    "Pxx": [2, 1, -1, -1, 1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    "Pxy": [2, -1, -1, -1, -1, -1, 1, 2, 0, 0, 0, 0, 0, 0, 0, 0],
    "Pxz": [2, -1, 1, -1, -1, -1, -1, 0, 0, 2, 0, 0, 0, 0, 0, 0],
    "Py0": [-2, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, -4, 0],
    "Pyx": [2, -1, -1, 1, -1, -1, -1, 2, 0, 0, 0, 0, 0, 0, 0, 0],
    "Pyy": [2, -1, 1, -1, -1, 1, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    "Pyz": [2, -1, -1, -1, 1, -1, -1, 0, 2, 0, 0, 0, 0, 0, 0, 0],
    "Pz0": [-2, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, -4],
    "Pzx": [2, -1, -1, -1, -1, 1, -1, 0, 0, 2, 0, 0, 0, 0, 0, 0],
    "Pzy": [2, 1, -1, -1, -1, -1, -1, 0, 2, 0, 0, 0, 0, 0, 0, 0],
    "Pzz": [2, -1, -1, 1, -1, -1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
}

MATRIX_UNIT_EXPANSIONS = {k: np.array(v, dtype=float) / 4 for k, v in _QUARTERS.items()}
