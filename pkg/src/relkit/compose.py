"""Dataset construction: splits, pair selection, placement, composition.

A dataset is a directory:

    <out>/
      manifest.jsonl        header + one record per stimulus
      objects/              object-set PNGs + index.json
      images/<split>/*.png  composed 224x224 stimuli

Determinism: every random decision draws from a stream derived from
(root_seed, purpose-tagged index), so outputs are byte-stable under
re-runs and independent of generation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from relkit.checksums import checksum_pixels
from relkit.factors import FactorCatalog, default_catalog, gen_factorized
from relkit.formats import write_manifest
from relkit.objects import NoiseSpec, build_object_set, save_object_set
from relkit.pngio import write_png
from relkit.records import (
    CANVAS_SIZE,
    DISSOCIATION_CONDITIONS,
    OBJECT_SIZE,
    DatasetManifest,
    ObjectImage,
    StimulusRecord,
    check_variant,
)
from relkit.seeds import (
    PURPOSE_DISSOC,
    PURPOSE_PAIRS,
    PURPOSE_PLACEMENT,
    PURPOSE_SINGLE,
    PURPOSE_SPLIT,
    SeedStream,
    derive_stream,
    stream_id,
)
from relkit.squiggles import SquiggleSpec
from relkit.transforms import mirror, to_grayscale, to_masked

MAX_PLACEMENT_ATTEMPTS = 1000
_POS_MAX = CANVAS_SIZE - OBJECT_SIZE  # inclusive upper corner coordinate

# 3x3 slot grid for aligned placement: token offsets {1,5,9} at 16 px/token
ALIGNED_OFFSETS = (16, 80, 144)
ALIGNED_SLOTS = tuple(
    (x, y) for y in ALIGNED_OFFSETS for x in ALIGNED_OFFSETS
)


class ConfigError(ValueError):
    """Invalid generation configuration."""


@dataclass
class GenerationConfig:
    source: str = "squiggle"
    object_count: int = 1600
    split_sizes: tuple[int, int, int] = (1200, 300, 100)
    stimuli_per_split: int = 6400
    placement_mode: str = "free"
    variant: str = "base"
    placements_per_pair: int = 1
    dataset_id: str | None = None
    # source-specific knobs; mirror the dataclass fields of each spec
    squiggle: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)
    import_dir: str | None = None
    condition: str | None = None  # dissociation sets only
    canvas_size: int = CANVAS_SIZE
    object_size: int = OBJECT_SIZE

    def validate(self) -> None:
        if self.source not in ("squiggle", "factorized", "noise", "imported"):
            raise ConfigError(f"unknown source {self.source!r}")
        try:
            check_variant(self.variant)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.placement_mode not in ("free", "aligned"):
            raise ConfigError(f"unknown placement_mode {self.placement_mode!r}")
        if (self.variant == "aligned") != (self.placement_mode == "aligned"):
            raise ConfigError("variant 'aligned' and placement_mode 'aligned' go together")
        if len(self.split_sizes) != 3 or any(s < 0 for s in self.split_sizes):
            raise ConfigError(f"bad split_sizes {self.split_sizes}")
        if sum(self.split_sizes) > self.object_count:
            raise ConfigError(
                f"split_sizes {self.split_sizes} exceed object_count {self.object_count}"
            )
        if self.stimuli_per_split <= 0 and self.variant != "single_object":
            raise ConfigError("stimuli_per_split must be positive")
        if self.variant not in ("single_object",) and self.stimuli_per_split % 2:
            raise ConfigError("stimuli_per_split must be even")
        if self.placements_per_pair < 1:
            raise ConfigError("placements_per_pair must be >= 1")
        if (
            self.variant not in ("single_object",)
            and not self.variant.startswith("dissociation:")
            and (self.stimuli_per_split // 2) % self.placements_per_pair
        ):
            raise ConfigError(
                "stimuli_per_split/2 must be divisible by placements_per_pair"
            )
        if (self.canvas_size, self.object_size) != (CANVAS_SIZE, OBJECT_SIZE):
            raise ConfigError("canvas 224 and object size 64 are fixed")
        if self.source == "imported" and not self.import_dir:
            raise ConfigError("imported source requires import_dir")

    @property
    def effective_id(self) -> str:
        if self.dataset_id:
            return self.dataset_id
        short = {"squiggle": "squ", "factorized": "sha", "noise": "nse", "imported": "imp"}
        base = short[self.source]
        return base if self.variant == "base" else f"{base}-{self.variant.replace(':', '-')}"

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "object_count": self.object_count,
            "split_sizes": list(self.split_sizes),
            "stimuli_per_split": self.stimuli_per_split,
            "placement_mode": self.placement_mode,
            "variant": self.variant,
            "placements_per_pair": self.placements_per_pair,
            "dataset_id": self.dataset_id,
            "squiggle": dict(self.squiggle),
            "noise": dict(self.noise),
            "import_dir": self.import_dir,
            "condition": self.condition,
            "canvas_size": self.canvas_size,
            "object_size": self.object_size,
        }

    @staticmethod
    def from_dict(d: dict) -> "GenerationConfig":
        known = {f for f in GenerationConfig.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = GenerationConfig(**{k: v for k, v in d.items() if k in known})
        cfg.split_sizes = tuple(cfg.split_sizes)
        return cfg


# ------------------------------------------------------------------- splits


def build_splits(
    object_ids: list[str], stream: SeedStream, sizes: tuple[int, int, int]
) -> dict[str, list[str]]:
    """Uniform random disjoint assignment into train/val/test."""
    if len(object_ids) < sum(sizes):
        raise ConfigError(f"need {sum(sizes)} objects, have {len(object_ids)}")
    order = stream.shuffle(object_ids)
    n_train, n_val, n_test = sizes
    return {
        "train": order[:n_train],
        "val": order[n_train : n_train + n_val],
        "test": order[n_train + n_val : n_train + n_val + n_test],
    }


# ------------------------------------------------------------- pair choice


def _balanced_counts(
    objects: list[str], total_slots: int, stream: SeedStream, prefer: set[str] | None = None
) -> dict[str, int]:
    """Slot counts per object with max-min <= 1; `prefer` objects get extras first."""
    n = len(objects)
    base, rem = divmod(total_slots, n)
    counts = {o: base for o in objects}
    order = stream.shuffle(objects)
    if prefer:
        order = [o for o in order if o in prefer] + [o for o in order if o not in prefer]
    for o in order[:rem]:
        counts[o] += 1
    return counts


def select_pairs(
    split_objects: list[str], quota_same: int, quota_diff: int, stream: SeedStream
) -> list[tuple[str, str, str]]:
    """Choose labeled object pairs for one split.

    "same" pairs are (o, o); "different" pairs draw two distinct objects.
    Rounds of random perfect matchings cover every object first; leftover
    quota goes to the objects with the fewest appearances, so per-object
    appearance counts differ by at most 1 within each label.
    """
    objects = list(split_objects)
    n = len(objects)
    if n == 0:
        if quota_same or quota_diff:
            raise ConfigError("no objects to pair")
        return []
    if quota_diff > 0 and n < 2:
        raise ConfigError("unachievable coverage: need >= 2 objects for 'different'")
    if quota_same + 2 * quota_diff < n:
        raise ConfigError(
            f"unachievable coverage: {quota_same}+2*{quota_diff} slots < {n} objects"
        )

    diff_pairs: list[tuple[str, str]] = []
    diff_counts = {o: 0 for o in objects}
    remaining = quota_diff
    while remaining > 0:
        order = stream.shuffle(objects)
        if remaining >= n // 2:
            if n % 2:
                # odd split: bench a max-count object so counts stay level
                bench = max(order, key=lambda o: (diff_counts[o],))
                order.remove(bench)
            take = len(order) // 2
        else:
            # partial round: only the least-used objects get another slot
            order.sort(key=lambda o: diff_counts[o])  # stable: keeps shuffle ties random
            order = order[: 2 * remaining]
            take = remaining
        for k in range(take):
            a, b = order[2 * k], order[2 * k + 1]
            diff_pairs.append((a, b))
            diff_counts[a] += 1
            diff_counts[b] += 1
        remaining -= take

    covered = {o for o, c in diff_counts.items() if c > 0}
    uncovered = {o for o in objects if o not in covered}
    same_counts = _balanced_counts(objects, quota_same, stream, prefer=uncovered)
    same_pairs = [(o, o) for o in objects for _ in range(same_counts[o])]

    out = [(a, b, "same") for a, b in same_pairs]
    out += [(a, b, "different") for a, b in diff_pairs]
    return out


def flipped_pair_objects(
    split_objects: list[str], quota: int, stream: SeedStream
) -> list[str]:
    """Objects for (o, mirror(o)) pairs, balanced to max-min <= 1 appearances."""
    counts = _balanced_counts(split_objects, quota, stream)
    return [o for o in split_objects for _ in range(counts[o])]


# -------------------------------------------------------------- placement


def place_pair(mode: str, stream: SeedStream) -> tuple[tuple[int, int], tuple[int, int]]:
    """Two non-overlapping 64x64 box positions on the canvas."""
    if mode == "aligned":
        i = stream.randint(9)
        j = stream.randint(8)
        if j >= i:
            j += 1
        return ALIGNED_SLOTS[i], ALIGNED_SLOTS[j]
    if mode != "free":
        raise ConfigError(f"unknown placement mode {mode!r}")
    for _ in range(MAX_PLACEMENT_ATTEMPTS):
        ax, ay = stream.randint(_POS_MAX + 1), stream.randint(_POS_MAX + 1)
        bx, by = stream.randint(_POS_MAX + 1), stream.randint(_POS_MAX + 1)
        if abs(ax - bx) < OBJECT_SIZE and abs(ay - by) < OBJECT_SIZE:
            continue
        return (ax, ay), (bx, by)
    raise RuntimeError("placement rejection sampling exhausted")


def place_single(stream: SeedStream) -> tuple[int, int]:
    return (stream.randint(_POS_MAX + 1), stream.randint(_POS_MAX + 1))


def compose_stimulus(
    pixels_a: np.ndarray,
    pixels_b: np.ndarray | None,
    pos_a: tuple[int, int],
    pos_b: tuple[int, int] | None,
) -> np.ndarray:
    """Blit object rasters onto a white canvas; object pixels overwrite."""
    canvas = np.full((CANVAS_SIZE, CANVAS_SIZE, 3), 255, np.uint8)
    x, y = pos_a
    canvas[y : y + OBJECT_SIZE, x : x + OBJECT_SIZE] = pixels_a
    if pixels_b is not None:
        x, y = pos_b
        canvas[y : y + OBJECT_SIZE, x : x + OBJECT_SIZE] = pixels_b
    return canvas


# ---------------------------------------------------------------- building


def _object_variant_transform(objects: list[ObjectImage], variant: str) -> list[ObjectImage]:
    if variant == "grayscale":
        return [to_grayscale(o) for o in objects]
    if variant == "masked":
        return [to_masked(o) for o in objects]
    return objects


def _distinct_placements(
    mode: str, stream: SeedStream, count: int
) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    seen = set()
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > MAX_PLACEMENT_ATTEMPTS * count:
            raise RuntimeError("cannot find enough distinct placements")
        p = place_pair(mode, stream)
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def _emit(
    out_dir: Path,
    dataset_id: str,
    split: str,
    index: int,
    label: str,
    oa: str,
    ob: str | None,
    pa,
    pb,
    variant: str,
    pixels_by_id: dict[str, np.ndarray],
    records: list,
    checksums: dict,
) -> None:
    sid = f"{dataset_id}-{split}-{index:06d}"
    rel = f"images/{split}/{sid}.png"
    canvas = compose_stimulus(
        pixels_by_id[oa], None if ob is None else pixels_by_id[ob], pa, pb
    )
    write_png(out_dir / rel, canvas)
    checksums[rel] = checksum_pixels(canvas)
    records.append(
        StimulusRecord(
            stimulus_id=sid,
            label=label,
            object_a=oa,
            object_b=ob,
            pos_a=pa,
            pos_b=pb,
            split=split,
            variant=variant,
            image_path=rel,
        )
    )


def _prepare_out(out_dir) -> Path:
    out = Path(out_dir)
    for split in ("train", "val", "test"):
        (out / "images" / split).mkdir(parents=True, exist_ok=True)
    return out


def build_dataset(
    config: GenerationConfig, root_seed: int, out_dir
) -> DatasetManifest:
    """Generate a complete pair dataset (base/grayscale/masked/flipped/aligned)."""
    config.validate()
    if config.variant == "single_object":
        raise ConfigError("use build_single_object_set for single_object datasets")
    if config.condition or config.variant.startswith("dissociation:"):
        raise ConfigError("use build_dissociation_sets for dissociation datasets")
    out = _prepare_out(out_dir)
    dataset_id = config.effective_id

    objects = build_object_set(
        config.source,
        config.object_count,
        root_seed,
        squiggle_spec=SquiggleSpec(**config.squiggle) if config.squiggle else SquiggleSpec(),
        noise_spec=NoiseSpec(**config.noise) if config.noise else NoiseSpec(),
        import_dir=config.import_dir,
    )
    objects = _object_variant_transform(objects, config.variant)

    if config.variant == "flipped":
        sym = sum(
            1 for o in objects if np.array_equal(o.pixels, o.pixels[:, ::-1])
        )
        if sym * 2 > len(objects):
            raise ConfigError(
                f"flipped variant degenerate: {sym}/{len(objects)} objects mirror-symmetric"
            )

    ids = [o.object_id for o in objects]
    by_id = {o.object_id: o for o in objects}
    pixels_by_id = {o.object_id: o.pixels for o in objects}
    splits = build_splits(ids, derive_stream(root_seed, stream_id(PURPOSE_SPLIT, 0)), config.split_sizes)

    all_objects = list(objects)
    records: list[StimulusRecord] = []
    checksums: dict[str, int] = {}
    quota = config.stimuli_per_split // 2
    ppp = config.placements_per_pair
    pair_global = 0

    for split_idx, split in enumerate(("train", "val", "test")):
        members = splits[split]
        if not members:
            continue
        pair_stream = derive_stream(root_seed, stream_id(PURPOSE_PAIRS, split_idx))
        if config.variant == "flipped":
            same_counts = _balanced_counts(members, quota // ppp, pair_stream)
            pairs = [(o, o, "same") for o in members for _ in range(same_counts[o])]
            for o in flipped_pair_objects(members, quota // ppp, pair_stream):
                flip_id = f"{o}~flip"
                if flip_id not in pixels_by_id:
                    src = by_id[o]
                    flipped_obj = ObjectImage(
                        flip_id, mirror(src).pixels, src.source, src.factors
                    )
                    pixels_by_id[flip_id] = flipped_obj.pixels
                    all_objects.append(flipped_obj)
                pairs.append((o, flip_id, "different"))
        else:
            pairs = select_pairs(members, quota // ppp, quota // ppp, pair_stream)
        index = 0
        for oa, ob, label in pairs:
            pstream = derive_stream(root_seed, stream_id(PURPOSE_PLACEMENT, pair_global))
            pair_global += 1
            for pa, pb in _distinct_placements(config.placement_mode, pstream, ppp):
                _emit(
                    out, dataset_id, split, index, label, oa, ob, pa, pb,
                    config.variant, pixels_by_id, records, checksums,
                )
                index += 1

    save_object_set(all_objects, out / "objects")
    manifest = DatasetManifest(
        dataset_id=dataset_id,
        root_seed=root_seed,
        config=config.to_dict(),
        records=records,
        object_splits=splits,
        image_checksums=checksums,
    )
    write_manifest(manifest, out / "manifest.jsonl")
    return manifest


# ---------------------------------------------------------------- variants


def build_variant(base_dir, kind: str, out_dir) -> DatasetManifest:
    """Re-render an existing base dataset as grayscale, masked, or flipped."""
    from relkit.formats import read_manifest
    from relkit.objects import load_object_set

    if kind not in ("grayscale", "masked", "flipped"):
        raise ConfigError(f"unknown variant kind {kind!r}")
    base_dir = Path(base_dir)
    base = read_manifest(base_dir / "manifest.jsonl")
    objects = load_object_set(base_dir / "objects")
    out = _prepare_out(out_dir)

    cfg = dict(base.config)
    cfg["variant"] = kind
    base_id = base.dataset_id
    dataset_id = f"{base_id}-{kind}"
    cfg["dataset_id"] = dataset_id

    if kind in ("grayscale", "masked"):
        objects = _object_variant_transform(objects, kind)
        pixels_by_id = {o.object_id: o.pixels for o in objects}
        records: list[StimulusRecord] = []
        checksums: dict[str, int] = {}
        for rec in base.records:
            _emit(
                out, dataset_id, rec.split, int(rec.stimulus_id.rsplit("-", 1)[1]),
                rec.label, rec.object_a, rec.object_b, rec.pos_a, rec.pos_b,
                kind, pixels_by_id, records, checksums,
            )
        all_objects = objects
    else:  # flipped
        sym = sum(1 for o in objects if np.array_equal(o.pixels, o.pixels[:, ::-1]))
        if sym * 2 > len(objects):
            raise ConfigError(
                f"flipped variant degenerate: {sym}/{len(objects)} objects mirror-symmetric"
            )
        pixels_by_id = {o.object_id: o.pixels for o in objects}
        by_id = {o.object_id: o for o in objects}
        all_objects = list(objects)
        records = []
        checksums = {}
        for rec in base.records:
            if rec.label == "same":
                oa, ob = rec.object_a, rec.object_b
            else:
                # rebuild as (o, mirror(o)) at the original positions
                oa = rec.object_a
                ob = f"{oa}~flip"
                if ob not in pixels_by_id:
                    src = by_id[oa]
                    m = mirror(src)
                    flipped_obj = ObjectImage(ob, m.pixels, src.source, src.factors)
                    pixels_by_id[ob] = flipped_obj.pixels
                    all_objects.append(flipped_obj)
            _emit(
                out, dataset_id, rec.split, int(rec.stimulus_id.rsplit("-", 1)[1]),
                rec.label, oa, ob, rec.pos_a, rec.pos_b,
                "flipped", pixels_by_id, records, checksums,
            )

    save_object_set(all_objects, out / "objects")
    manifest = DatasetManifest(
        dataset_id=dataset_id,
        root_seed=base.root_seed,
        config=cfg,
        records=records,
        object_splits=base.object_splits,
        image_checksums=checksums,
    )
    write_manifest(manifest, out / "manifest.jsonl")
    return manifest


# ------------------------------------------------------------ dissociation

_CONDITION_FLAGS = {
    "none": (False, False, False),
    "S": (False, False, True),
    "T": (False, True, False),
    "TS": (False, True, True),
    "C": (True, False, False),
    "CS": (True, False, True),
    "CT": (True, True, False),
    "CTS": (True, True, True),
}


def condition_flags(condition: str) -> tuple[bool, bool, bool]:
    """(color_same, texture_same, shape_same) for a condition name."""
    return _CONDITION_FLAGS[condition]


def build_dissociation_sets(
    out_root,
    root_seed: int,
    catalog: FactorCatalog | None = None,
    stimuli: int = 6400,
    unique_objects: int = 300,
) -> dict[str, DatasetManifest]:
    """Eight factor-controlled test sets, one per equality condition.

    Every stimulus in condition c pairs two objects whose factor-equality
    pattern matches c exactly.  CTS pairs an object with itself; the other
    conditions use disjoint (A, B) pairs, so each set exposes
    `unique_objects` distinct factor triples.
    """
    cat = catalog or default_catalog()
    shapes, texs, cols = list(cat.shapes), list(cat.textures), list(cat.colors)
    if min(len(shapes), len(texs), len(cols)) < 2:
        raise ConfigError("catalog needs >= 2 entries per factor")
    manifests: dict[str, DatasetManifest] = {}

    for cond_idx, cond in enumerate(DISSOCIATION_CONDITIONS):
        color_same, texture_same, shape_same = condition_flags(cond)
        stream = derive_stream(root_seed, stream_id(PURPOSE_DISSOC, cond_idx))
        triples = [(s, t, c) for s in shapes for t in texs for c in cols]
        order = stream.shuffle(triples)

        if cond == "CTS":
            chosen = order[:unique_objects]
            pair_triples = [(t, t) for t in chosen]
        else:
            n_pairs = unique_objects // 2
            used: set[tuple] = set()
            pair_triples = []
            base_iter = iter(order)
            while len(pair_triples) < n_pairs:
                a = next(base_iter)
                if a in used:
                    continue
                for _ in range(1000):
                    b = (
                        a[0] if shape_same else _other(shapes, a[0], stream),
                        a[1] if texture_same else _other(texs, a[1], stream),
                        a[2] if color_same else _other(cols, a[2], stream),
                    )
                    if b not in used and b != a:
                        break
                else:
                    raise ConfigError(f"cannot realize condition {cond}")
                used.add(a)
                used.add(b)
                pair_triples.append((a, b))

        out = _prepare_out(Path(out_root) / f"dis-{cond}")
        dataset_id = f"dis-{cond}"
        label = "same" if cond == "CTS" else "different"
        objects: list[ObjectImage] = []
        seen_ids: set[str] = set()
        pixels_by_id: dict[str, np.ndarray] = {}
        pairs: list[tuple[str, str]] = []
        for a, b in pair_triples:
            ia, ib = "+".join(a), "+".join(b)
            for triple, oid in ((a, ia), (b, ib)):
                if oid not in seen_ids:
                    seen_ids.add(oid)
                    obj = gen_factorized(*triple, cat, object_id=oid)
                    objects.append(obj)
                    pixels_by_id[oid] = obj.pixels
            pairs.append((ia, ib))

        base_count, rem = divmod(stimuli, len(pairs))
        records: list[StimulusRecord] = []
        checksums: dict[str, int] = {}
        index = 0
        for k, (ia, ib) in enumerate(pairs):
            reps = base_count + (1 if k < rem else 0)
            pstream = derive_stream(
                root_seed, stream_id(PURPOSE_PLACEMENT, (cond_idx << 20) | k)
            )
            for pa, pb in _distinct_placements("free", pstream, reps):
                _emit(
                    out, dataset_id, "test", index, label, ia, ib, pa, pb,
                    f"dissociation:{cond}", pixels_by_id, records, checksums,
                )
                index += 1

        save_object_set(objects, out / "objects")
        cfg = GenerationConfig(
            source="factorized",
            object_count=len(objects),
            split_sizes=(0, 0, len(objects)),
            stimuli_per_split=stimuli,
            variant=f"dissociation:{cond}",
            condition=cond,
            dataset_id=dataset_id,
        )
        manifest = DatasetManifest(
            dataset_id=dataset_id,
            root_seed=root_seed,
            config=cfg.to_dict(),
            records=records,
            object_splits={"train": [], "val": [], "test": [o.object_id for o in objects]},
            image_checksums=checksums,
        )
        write_manifest(manifest, out / "manifest.jsonl")
        manifests[cond] = manifest
    return manifests


def _other(values: list, current, stream: SeedStream):
    pick = stream.randint(len(values) - 1)
    idx = values.index(current)
    return values[pick if pick < idx else pick + 1]


# ---------------------------------------------------------- single object


def build_single_object_set(
    objects: list[ObjectImage],
    n: int,
    root_seed: int,
    out_dir,
    dataset_id: str = "single",
    source: str = "imported",
) -> DatasetManifest:
    """n images of one randomly placed object each, for embedding extraction."""
    if len(objects) < n:
        raise ConfigError(f"need {n} objects, have {len(objects)}")
    chooser = derive_stream(root_seed, stream_id(PURPOSE_SINGLE, 0))
    chosen = chooser.shuffle(objects)[:n] if len(objects) > n else list(objects)
    out = _prepare_out(out_dir)
    pixels_by_id = {o.object_id: o.pixels for o in chosen}
    records: list[StimulusRecord] = []
    checksums: dict[str, int] = {}
    for i, obj in enumerate(chosen):
        pstream = derive_stream(root_seed, stream_id(PURPOSE_SINGLE, 1 + i))
        pos = place_single(pstream)
        _emit(
            out, dataset_id, "test", i, "same", obj.object_id, None, pos, None,
            "single_object", pixels_by_id, records, checksums,
        )
    save_object_set(chosen, out / "objects")
    cfg = GenerationConfig(
        source=source,
        object_count=n,
        split_sizes=(0, 0, n),
        stimuli_per_split=n,
        variant="single_object",
        dataset_id=dataset_id,
    )
    manifest = DatasetManifest(
        dataset_id=dataset_id,
        root_seed=root_seed,
        config=cfg.to_dict(),
        records=records,
        object_splits={"train": [], "val": [], "test": [o.object_id for o in chosen]},
        image_checksums=checksums,
    )
    write_manifest(manifest, out / "manifest.jsonl")
    return manifest


# ------------------------------------------------------------------ sweep


def build_sweep(
    base_config: GenerationConfig,
    unique_object_counts: list[int],
    stimulus_counts: list[int],
    root_seed: int,
    out_root,
) -> dict[tuple[int, int], DatasetManifest]:
    """One training dataset per (unique objects, stimuli) grid cell."""
    if not unique_object_counts or not stimulus_counts:
        raise ConfigError("sweep lists must be non-empty")
    grid: dict[tuple[int, int], DatasetManifest] = {}
    for u in unique_object_counts:
        if u < 2:
            raise ConfigError(f"sweep needs >= 2 unique objects, got {u}")
        for s in stimulus_counts:
            cfg = replace(
                base_config,
                object_count=u,
                split_sizes=(u, 0, 0),
                stimuli_per_split=s,
                dataset_id=f"{base_config.effective_id}-u{u}-s{s}",
            )
            cell_dir = Path(out_root) / f"u{u}-s{s}"
            grid[(u, s)] = build_dataset(cfg, root_seed, cell_dir)
    return grid
