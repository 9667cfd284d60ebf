"""Backend dispatch for the numeric kernels.

The environment variable ``PUBAG_BACKEND`` selects the implementation:

* unset or ``numba`` -- JIT-compiled kernels (falls back to numpy with a
  warning if numba is not importable and the variable is unset);
* ``numpy`` -- pure numpy/scipy implementations of the same functions.

Both backends expose identical call signatures and use the same seeded
permutation stream; results may differ in floating-point rounding only.
"""

import os
import warnings

_requested = os.environ.get("PUBAG_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise ImportError(f"PUBAG_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numpy":
    from . import _numpyimpl as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _numbaimpl as _impl

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        warnings.warn("numba unavailable; using the pure-numpy kernel backend")
        from . import _numpyimpl as _impl

        BACKEND = "numpy"

splitmix_sequence = _impl.splitmix_sequence
permutation_rounds = _impl.permutation_rounds
linear_scores = _impl.linear_scores
expansion_scores = _impl.expansion_scores
svm_linear_cd = _impl.svm_linear_cd
svm_linear_violation = _impl.svm_linear_violation
svm_kernel_cd = _impl.svm_kernel_cd
svm_kernel_violation = _impl.svm_kernel_violation
logit_newton = _impl.logit_newton

__all__ = [
    "BACKEND",
    "splitmix_sequence",
    "permutation_rounds",
    "linear_scores",
    "expansion_scores",
    "svm_linear_cd",
    "svm_linear_violation",
    "svm_kernel_cd",
    "svm_kernel_violation",
    "logit_newton",
]
