"""Worker-count resolution shared by the library and the CLI."""

import os

ENV_VAR = "MVZ_THREADS"


def resolve_threads(threads=None) -> int:
    """Turn a requested thread count into a positive integer.

    ``None`` consults ``MVZ_THREADS``; ``0`` (or an unset variable) means one
    worker per available CPU.
    """
    if threads is None:
        env = os.environ.get(ENV_VAR, "").strip()
        threads = int(env) if env else 0
    threads = int(threads)
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    if threads == 0:
        try:
            threads = len(os.sched_getaffinity(0))
        except AttributeError:  # pragma: no cover
            threads = os.cpu_count() or 1
    return max(1, threads)
