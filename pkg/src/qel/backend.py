"""Select the compiled extension core or the numpy fallback at import time.

Set QEL_FORCE_FALLBACK=1 to force the pure-numpy path (used for testing and
for the backend benchmark).
"""

import os

if os.environ.get("QEL_FORCE_FALLBACK"):
    from qel import _slowcore as _impl

    COMPILED = False
else:
    try:
        from qel import _fastcore as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        from qel import _slowcore as _impl

        COMPILED = False

bicubic_many = _impl.bicubic_many
farfield_sum = _impl.farfield_sum
