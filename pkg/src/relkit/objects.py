"""Object-set construction: noise patches, imported images, set orchestration.

An object set is the pool of unique 64x64 objects a dataset draws from.
Sets are stored as a directory of PNGs plus an ``index.json`` recording
{object_id, source, factors} per object.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from relkit.pngio import read_png, write_png
from relkit.records import OBJECT_SIZE, Factors, ObjectImage
from relkit.seeds import PURPOSE_OBJECT, SeedStream, derive_stream, stream_id
from relkit.squiggles import SquiggleSpec, gen_squiggle
from relkit.factors import FactorCatalog, default_catalog, gen_factorized

log = logging.getLogger("relkit")


@dataclass(frozen=True)
class NoiseSpec:
    mu: float = 0.0
    sigma: float = 1.0
    # affine map from draw value to 8-bit gray, then clipped to [0, 255]
    map_offset: float = 127.5
    map_scale: float = 63.75

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")


def normal_array(stream: SeedStream, count: int) -> np.ndarray:
    """Standard-normal draws via Box-Muller; exactly `count` values."""
    m = (count + 1) // 2
    # u1 in (0, 1] so log() is finite; u2 in [0, 1)
    u1 = ((stream.u64_array(m) >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = stream.uniform_array(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:count]


def gen_noise(spec: NoiseSpec, stream: SeedStream, object_id: str = "noise") -> ObjectImage:
    draws = spec.mu + spec.sigma * normal_array(stream, OBJECT_SIZE * OBJECT_SIZE)
    gray = np.clip(np.rint(spec.map_offset + spec.map_scale * draws), 0, 255)
    gray = gray.astype(np.uint8).reshape(OBJECT_SIZE, OBJECT_SIZE)
    return ObjectImage(object_id, np.repeat(gray[..., None], 3, axis=-1), "noise")


def _load_one_image(path: Path) -> np.ndarray | None:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except Exception as e:  # non-image files are skipped with a warning
        log.warning("skipping %s: %s", path.name, e)
        return None


def import_objects(directory) -> list[ObjectImage]:
    """Load external images: white-pad to square, bilinear-resample to 64x64."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"not a directory: {directory}")
    objects: list[ObjectImage] = []
    seen: set[str] = set()
    for path in sorted(p for p in directory.iterdir() if p.is_file()):
        pixels = _load_one_image(path)
        if pixels is None:
            continue
        oid = path.stem
        if oid in seen:
            raise ValueError(f"duplicate object_id from filename: {oid!r}")
        seen.add(oid)
        objects.append(ObjectImage(oid, _standardize(pixels), "imported"))
    if not objects:
        raise ValueError(f"no readable images in {directory}")
    return objects


def _standardize(pixels: np.ndarray) -> np.ndarray:
    h, w = pixels.shape[:2]
    if (h, w) == (OBJECT_SIZE, OBJECT_SIZE):
        return pixels.copy()  # already conformant: byte-identical passthrough
    side = max(h, w)
    square = np.full((side, side, 3), 255, np.uint8)
    y0 = (side - h) // 2
    x0 = (side - w) // 2
    square[y0 : y0 + h, x0 : x0 + w] = pixels
    im = Image.fromarray(square).resize(
        (OBJECT_SIZE, OBJECT_SIZE), Image.Resampling.BILINEAR
    )
    return np.asarray(im)


def build_object_set(
    source: str,
    count: int,
    root_seed: int,
    *,
    squiggle_spec: SquiggleSpec | None = None,
    noise_spec: NoiseSpec | None = None,
    import_dir=None,
    catalog: FactorCatalog | None = None,
) -> list[ObjectImage]:
    """Produce `count` unique objects of one source kind, deterministically.

    Object g draws from stream (root_seed, OBJECT:g), so sets are stable
    under reordering and parallel generation.
    """
    if source == "squiggle":
        spec = squiggle_spec or SquiggleSpec()
        return [
            gen_squiggle(
                spec, derive_stream(root_seed, stream_id(PURPOSE_OBJECT, g)), f"squ-{g:06d}"
            )
            for g in range(count)
        ]
    if source == "noise":
        spec = noise_spec or NoiseSpec()
        return [
            gen_noise(
                spec, derive_stream(root_seed, stream_id(PURPOSE_OBJECT, g)), f"nse-{g:06d}"
            )
            for g in range(count)
        ]
    if source == "factorized":
        cat = catalog or default_catalog()
        triples = [
            (s, t, c) for s in cat.shapes for t in cat.textures for c in cat.colors
        ]
        if count > len(triples):
            raise ValueError(
                f"factorized set of {count} exceeds {len(triples)} distinct triples"
            )
        chooser = derive_stream(root_seed, stream_id(PURPOSE_OBJECT, 0))
        chosen = chooser.shuffle(triples)[:count]
        return [
            gen_factorized(s, t, c, cat, object_id=f"sha-{g:06d}")
            for g, (s, t, c) in enumerate(chosen)
        ]
    if source == "imported":
        if import_dir is None:
            raise ValueError("imported source needs import_dir")
        objects = import_objects(import_dir)
        if len(objects) < count:
            raise ValueError(f"need {count} objects, found {len(objects)}")
        if len(objects) > count:
            chooser = derive_stream(root_seed, stream_id(PURPOSE_OBJECT, 0))
            objects = chooser.shuffle(objects)[:count]
        return objects
    raise ValueError(f"unknown object source {source!r}")


# ------------------------------------------------------ object-set storage


def save_object_set(objects: list[ObjectImage], directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = []
    for obj in objects:
        write_png(directory / f"{obj.object_id}.png", obj.pixels)
        index.append(
            {
                "object_id": obj.object_id,
                "source": obj.source,
                "factors": obj.factors.to_dict() if obj.factors else None,
            }
        )
    with open(directory / "index.json", "w", encoding="utf-8") as f:
        json.dump(index, f, indent=1, sort_keys=True)


def load_object_set(directory) -> list[ObjectImage]:
    directory = Path(directory)
    with open(directory / "index.json", encoding="utf-8") as f:
        index = json.load(f)
    objects = []
    for entry in index:
        pixels = read_png(directory / f"{entry['object_id']}.png")
        factors = Factors.from_dict(entry["factors"]) if entry.get("factors") else None
        objects.append(
            ObjectImage(entry["object_id"], pixels, entry["source"], factors)
        )
    return objects


def load_object_index(directory) -> dict[str, dict]:
    """Just the metadata (object_id -> {source, factors}), no rasters."""
    with open(Path(directory) / "index.json", encoding="utf-8") as f:
        index = json.load(f)
    return {e["object_id"]: e for e in index}
