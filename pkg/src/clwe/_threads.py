"""Honor CLWE_THREADS before any BLAS-backed import happens.

BLAS thread pools read their environment at library load time, so this
module must be imported before numpy. Existing explicit settings win.
"""

import os

_requested = os.environ.get("CLWE_THREADS")
if _requested:
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(_var, _requested)
