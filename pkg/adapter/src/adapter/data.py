"""Stimulus images as tensors.

Images are cached as uint8 (a 6400-stimulus split is under 1 GB) and
scaled to [0, 1] on access; each backbone applies its own normalization.
Order follows the manifest, so row i of any export corresponds to record i.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from adapter.formats import Stimulus


class StimulusData:
    def __init__(self, image_root, records: list[Stimulus]):
        root = Path(image_root)
        self.ids = [r.stimulus_id for r in records]
        self.labels = torch.tensor(
            [1 if r.label == "same" else 0 for r in records], dtype=torch.long
        )
        frames = []
        for r in records:
            with Image.open(root / r.image_path) as im:
                frames.append(np.asarray(im.convert("RGB"), dtype=np.uint8))
        self.images = torch.from_numpy(np.stack(frames))  # (n, H, W, 3) uint8

    def __len__(self) -> int:
        return len(self.ids)

    def batch(self, idx: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        x = self.images[idx].permute(0, 3, 1, 2).float()
        return x / 255.0, self.labels[idx]

    def iter_batches(self, batch_size: int, shuffle_seed: int | None = None):
        n = len(self)
        if shuffle_seed is None:
            order = torch.arange(n)
        else:
            g = torch.Generator().manual_seed(shuffle_seed)
            order = torch.randperm(n, generator=g)
        for start in range(0, n, batch_size):
            yield self.batch(order[start : start + batch_size])
