"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled extension is used when present; set ``FRAMESENSE_PURE=1`` to
force the numpy fallback (useful for benchmarking and debugging).
"""

import os

from . import pure

if os.environ.get("FRAMESENSE_PURE", "") not in ("", "0"):
    _impl = pure
else:
    try:
        from . import _tones as _impl
    except ImportError:
        _impl = pure

synth_tones = _impl.synth_tones
IMPLEMENTATION = _impl.IMPLEMENTATION

__all__ = ["synth_tones", "IMPLEMENTATION", "pure"]
