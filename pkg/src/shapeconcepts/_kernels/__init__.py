"""Hot numeric kernels with a compiled core and a pure numpy fallback.

At import time the Cython extension is preferred; if it is missing (or
``SHAPECONCEPTS_PURE=1`` is set) the numpy implementations are used
instead. ``BACKEND`` reports which one is active. Both backends are
behaviorally equivalent and cross-checked in the tests; see
``benchmarks/bench_kernels.py`` for a speed comparison.
"""

import os

if os.environ.get("SHAPECONCEPTS_PURE", "") not in ("", "0"):
    from . import _pure as _impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pure as _impl

BACKEND = _impl.BACKEND
jsd = _impl.jsd
jsd_matrix = _impl.jsd_matrix
pair_feature_histogram = _impl.pair_feature_histogram
tsne_kl_grad = _impl.tsne_kl_grad

__all__ = ["BACKEND", "jsd", "jsd_matrix", "pair_feature_histogram", "tsne_kl_grad"]
