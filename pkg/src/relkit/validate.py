"""Dataset validation: every structural and pixel-level invariant.

The report lists each violated invariant; an empty report means the dataset
is well-formed.  Missing images are reported rather than fatal; a manifest
that does not parse at all raises FormatError upstream.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from relkit.checksums import checksum_pixels
from relkit.compose import ALIGNED_SLOTS, GenerationConfig, condition_flags
from relkit.objects import load_object_index, load_object_set
from relkit.pngio import read_png
from relkit.records import (
    CANVAS_SIZE,
    OBJECT_SIZE,
    DatasetManifest,
    StimulusRecord,
    ValidationReport,
    is_dissociation_variant,
)

_POS_MAX = CANVAS_SIZE - OBJECT_SIZE


def _region(img: np.ndarray, pos: tuple[int, int]) -> np.ndarray:
    x, y = pos
    return img[y : y + OBJECT_SIZE, x : x + OBJECT_SIZE]


def _in_bounds(pos: tuple[int, int]) -> bool:
    return 0 <= pos[0] <= _POS_MAX and 0 <= pos[1] <= _POS_MAX


def _boxes_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return abs(a[0] - b[0]) < OBJECT_SIZE and abs(a[1] - b[1]) < OBJECT_SIZE


def _expected_labels(variant: str) -> str:
    """'balanced', 'all-same', or 'all-different' for a variant."""
    if variant == "single_object":
        return "all-same"
    if is_dissociation_variant(variant):
        return "all-same" if variant == "dissociation:CTS" else "all-different"
    return "balanced"


def validate_dataset(manifest: DatasetManifest, image_root) -> ValidationReport:
    rep = ValidationReport()
    root = Path(image_root)

    cfg: GenerationConfig | None = None
    try:
        cfg = GenerationConfig.from_dict(manifest.config)
    except Exception as e:
        rep.add("config", f"config echo does not parse: {e}")

    _check_splits(manifest, cfg, rep)
    _check_metadata(manifest, cfg, rep)
    _check_images(manifest, root, rep)
    return rep


# ----------------------------------------------------------------- metadata


def _check_splits(manifest, cfg, rep) -> None:
    splits = manifest.object_splits
    seen: dict[str, str] = {}
    for split, ids in splits.items():
        for oid in ids:
            if oid in seen:
                rep.add(
                    "disjointness",
                    f"object {oid} in both {seen[oid]} and {split}",
                )
            seen[oid] = split
        if len(set(ids)) != len(ids):
            rep.add("disjointness", f"duplicate object ids within split {split}")
    if cfg is not None:
        for split, want in zip(("train", "val", "test"), cfg.split_sizes):
            have = len(splits.get(split, []))
            if have != want:
                rep.add(
                    "split-size", f"{split} has {have} objects, config says {want}"
                )


def _check_metadata(manifest, cfg, rep) -> None:
    records = manifest.records
    ids_seen: set[str] = set()
    split_of = {
        oid: split for split, ids in manifest.object_splits.items() for oid in ids
    }
    per_split: dict[str, list[StimulusRecord]] = {}

    for rec in records:
        if rec.stimulus_id in ids_seen:
            rep.add("duplicate-id", f"stimulus {rec.stimulus_id} appears twice")
        ids_seen.add(rec.stimulus_id)
        per_split.setdefault(rec.split, []).append(rec)

        for oid in (rec.object_a, rec.object_b):
            if oid is None:
                continue
            base = oid.split("~", 1)[0]  # mirrored objects belong with their source
            if split_of.get(base) != rec.split and split_of.get(oid) != rec.split:
                rep.add(
                    "split-membership",
                    f"{rec.stimulus_id}: object {oid} not in split {rec.split}",
                )

        if not _in_bounds(rec.pos_a) or (rec.pos_b is not None and not _in_bounds(rec.pos_b)):
            rep.add("bounds", f"{rec.stimulus_id}: box outside canvas")
        if rec.pos_b is not None and _boxes_overlap(rec.pos_a, rec.pos_b):
            rep.add("overlap", f"{rec.stimulus_id}: boxes intersect")
        if rec.variant == "aligned":
            if tuple(rec.pos_a) not in ALIGNED_SLOTS or tuple(rec.pos_b) not in ALIGNED_SLOTS:
                rep.add("aligned-slots", f"{rec.stimulus_id}: position off the slot grid")
            elif rec.pos_a == rec.pos_b:
                rep.add("aligned-slots", f"{rec.stimulus_id}: both objects in one slot")
        if rec.variant == "single_object" and rec.object_b is not None:
            rep.add("single-object", f"{rec.stimulus_id}: second object present")

    for split, recs in per_split.items():
        n_same = sum(1 for r in recs if r.label == "same")
        n_diff = len(recs) - n_same
        mode = _expected_labels(recs[0].variant)
        if mode == "balanced" and n_same != n_diff:
            rep.add("balance", f"{split}: {n_same} same vs {n_diff} different")
        elif mode == "all-same" and n_diff:
            rep.add("balance", f"{split}: {n_diff} 'different' records in all-same set")
        elif mode == "all-different" and n_same:
            rep.add("balance", f"{split}: {n_same} 'same' records in all-different set")
        if cfg is not None and len(recs) != cfg.stimuli_per_split:
            rep.add(
                "count",
                f"{split}: {len(recs)} stimuli, config says {cfg.stimuli_per_split}",
            )

    # every object in its split appears in at least one record
    used: set[str] = set()
    for rec in records:
        used.add(rec.object_a.split("~", 1)[0])
        if rec.object_b is not None:
            used.add(rec.object_b.split("~", 1)[0])
        used.add(rec.object_a)
        if rec.object_b is not None:
            used.add(rec.object_b)
    for split, ids in manifest.object_splits.items():
        if not any(r.split == split for r in records):
            continue
        for oid in ids:
            if oid not in used:
                rep.add("coverage", f"object {oid} ({split}) appears in no record")


# ------------------------------------------------------------------- images


def _check_images(manifest, root, rep) -> None:
    objects_dir = root / "objects"
    rasters: dict[str, np.ndarray] = {}
    factors: dict[str, dict] = {}
    if (objects_dir / "index.json").is_file():
        try:
            for obj in load_object_set(objects_dir):
                rasters[obj.object_id] = obj.pixels
            factors = {
                oid: meta.get("factors")
                for oid, meta in load_object_index(objects_dir).items()
            }
        except Exception as e:
            rep.add("objects", f"object set unreadable: {e}")

    for rec in manifest.records:
        path = root / rec.image_path
        if not path.is_file():
            rep.add("missing-image", f"{rec.stimulus_id}: {rec.image_path} not found")
            continue
        try:
            img = read_png(path)
        except Exception as e:
            rep.add("missing-image", f"{rec.stimulus_id}: unreadable image: {e}")
            continue
        if img.shape != (CANVAS_SIZE, CANVAS_SIZE, 3):
            rep.add("image-shape", f"{rec.stimulus_id}: image is {img.shape}")
            continue

        want = manifest.image_checksums.get(rec.image_path)
        if want is None:
            rep.add("checksum", f"{rec.stimulus_id}: no checksum recorded")
        elif checksum_pixels(img) != want:
            rep.add("checksum", f"{rec.stimulus_id}: pixel checksum mismatch")

        _check_pixel_rules(rec, img, rasters, factors, rep)


def _check_pixel_rules(rec, img, rasters, factors, rep) -> None:
    ra = _region(img, rec.pos_a)
    rb = None if rec.pos_b is None else _region(img, rec.pos_b)

    if rec.variant == "masked":
        flat = img.reshape(-1, 3)
        ok = np.all(flat == 255, axis=1) | np.all(flat == 100, axis=1)
        if not ok.all():
            rep.add(
                "masked-alphabet",
                f"{rec.stimulus_id}: pixels outside {{gray, white}}",
            )
    if rec.variant == "grayscale":
        if not (
            np.array_equal(img[..., 0], img[..., 1])
            and np.array_equal(img[..., 0], img[..., 2])
        ):
            rep.add("grayscale-channels", f"{rec.stimulus_id}: channels differ")

    if rec.pos_b is None:
        # single object: everything outside its box must be white
        outside = img.copy()
        x, y = rec.pos_a
        outside[y : y + OBJECT_SIZE, x : x + OBJECT_SIZE] = 255
        if not np.all(outside == 255):
            rep.add("single-object", f"{rec.stimulus_id}: extra non-white pixels")
    else:
        if rec.label == "same":
            if not np.array_equal(ra, rb):
                rep.add(
                    "pixel-equality",
                    f"{rec.stimulus_id}: 'same' objects are not pixel-identical",
                )
        elif rec.variant in ("base", "aligned") or is_dissociation_variant(rec.variant):
            if np.array_equal(ra, rb):
                rep.add(
                    "pixel-equality",
                    f"{rec.stimulus_id}: 'different' objects are pixel-identical",
                )
        if rec.variant == "flipped" and rec.label == "different":
            if not np.array_equal(rb, ra[:, ::-1]):
                rep.add(
                    "flip-audit",
                    f"{rec.stimulus_id}: object_b is not the mirror of object_a",
                )

    if rasters:
        for oid, region in ((rec.object_a, ra), (rec.object_b, rb)):
            if oid is None:
                continue
            raster = rasters.get(oid)
            if raster is None:
                rep.add("objects", f"{rec.stimulus_id}: object {oid} missing from set")
            elif not np.array_equal(region, raster):
                rep.add(
                    "object-raster",
                    f"{rec.stimulus_id}: image region differs from object {oid}",
                )

    if is_dissociation_variant(rec.variant) and factors:
        fa = factors.get(rec.object_a)
        fb = factors.get(rec.object_b)
        if not fa or not fb:
            rep.add("factor-audit", f"{rec.stimulus_id}: factors missing")
        else:
            cond = rec.variant.split(":", 1)[1]
            color_same, texture_same, shape_same = condition_flags(cond)
            checks = (
                ("color_id", color_same),
                ("texture_id", texture_same),
                ("shape_id", shape_same),
            )
            for key, want_equal in checks:
                if (fa[key] == fb[key]) != want_equal:
                    rep.add(
                        "factor-audit",
                        f"{rec.stimulus_id}: {key} equality does not match {cond}",
                    )
