"""relkit: deterministic same-different visual relation datasets.

Generation, validation, metric evaluation, and embedding analysis for the
two-object pixel-level same-different task.
"""

from relkit.seeds import SeedStream, derive_stream

__all__ = ["SeedStream", "derive_stream"]

__version__ = "0.1.0"
