"""Backend selection for the batched kernels.

Two implementations of the same batch API exist: a compiled extension
(gwcheck._core) and a plain numpy one (gwcheck._pycore). Both consume the
caller's bit generators through the same draw-order contracts, so stream
states agree exactly after any batch; floating point values may differ at
rounding level because the linear algebra is computed differently.

Selection happens at import. GWCHECK_BACKEND=python or GWCHECK_BACKEND=compiled
forces one side; by default the compiled module is used when it imports and
the numpy fallback otherwise.
"""

import os

from .rng import as_generator

__all__ = [
    "name",
    "normalize_gens",
    "wishart_batch",
    "exact_batch",
    "claimed_batch",
    "run_chains",
    "resample_gaps",
]


def _load():
    forced = os.environ.get("GWCHECK_BACKEND", "").strip().lower()
    if forced == "python":
        from . import _pycore
        return _pycore
    if forced == "compiled":
        from . import _core
        return _core
    if forced:
        raise ImportError(
            f"GWCHECK_BACKEND={forced!r}: expected 'python' or 'compiled'"
        )
    try:
        from . import _core
        return _core
    except ImportError:
        from . import _pycore
        return _pycore


_impl = _load()

name = _impl.BACKEND_NAME
wishart_batch = _impl.wishart_batch
exact_batch = _impl.exact_batch
claimed_batch = _impl.claimed_batch
run_chains = _impl.run_chains
resample_gaps = _impl.resample_gaps


def normalize_gens(gens, n: int) -> list:
    """Coerce gens to a list of numpy Generators of length 1 or n.

    A single stream means sequential consumption by one worker; a list of n
    gives unit of work i its own stream, so results match a per-draw loop.
    """
    if isinstance(gens, (list, tuple)):
        out = [as_generator(g) for g in gens]
        if len(out) != n and len(out) != 1:
            raise ValueError(f"got {len(out)} generators for {n} units of work")
        return out
    return [as_generator(gens)]
