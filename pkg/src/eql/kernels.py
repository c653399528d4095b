"""Hot-loop kernels, compiled when available.

The compiled extension ``eql._ckernels`` is used if it imports; otherwise the
pure-Python ``eql._pykernels`` is used. Set ``EQL_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from eql import _pykernels

LIT = _pykernels.LIT
ONE = _pykernels.ONE
ANY = _pykernels.ANY

BACKEND = "python"
match_atoms = _pykernels.match_atoms
edit_distance = _pykernels.edit_distance

if os.environ.get("EQL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from eql import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        match_atoms = _ckernels.match_atoms
        edit_distance = _ckernels.edit_distance

__all__ = ["ANY", "BACKEND", "LIT", "ONE", "edit_distance", "match_atoms"]
