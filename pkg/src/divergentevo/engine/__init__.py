"""Episode-evaluation backends.

The hot kernel (one full lockstep generation of maze episodes) exists twice:
a Cython extension (`_speedups`) and a vectorized numpy fallback
(`_python`). The compiled backend is used when importable; set
DIVERGENT_EVO_BACKEND=python|compiled to force one. Both produce identical
run records; `benchmarks/bench_backends.py` compares their speed.
"""

import os

_requested = os.environ.get("DIVERGENT_EVO_BACKEND", "").strip().lower()

if _requested not in ("", "compiled", "python"):
    raise RuntimeError(
        f"DIVERGENT_EVO_BACKEND must be 'compiled' or 'python', got {_requested!r}"
    )

if _requested == "python":
    from . import _python as _impl

    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        from . import _python as _impl

        BACKEND = "python"

run_maze_generation = _impl.run_maze_generation


def get_backend(name: str):
    """Return a specific backend module (for tests and benchmarks)."""
    if name == "python":
        from . import _python

        return _python
    if name == "compiled":
        from . import _speedups

        return _speedups
    raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list:
    names = ["python"]
    try:
        from . import _speedups  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return names
