"""Bridges vision backbones to same-different datasets on disk.

The adapter trains and embeds; it never scores. Every file it reads or
writes follows the dataset toolkit's formats (manifest JSONL, prediction
CSV, embedding binary, label CSV), and nothing here imports that package:
the byte formats are the only coupling.
"""

__version__ = "0.1.0"
