"""Dataset generation, persistence and loading.

Each sample pairs a distorted-beam intensity image with its ground-truth
phase screen, both stored as 16-bit PGM files named ``{split}/{id}_x.pgm``
and ``{split}/{id}_y.pgm`` under the dataset root. A flat key-value
manifest (written last, as the commit point) records the grid, beam and
turbulence parameters, the observation mode, the per-level screen encoding
ranges, the base seed and a sha256 hash of every sample file.

Two observation modes select what the recorded intensity image is:

``fourier`` (default)
    The camera sits in the focal plane of an ideal lens behind the screen,
    so the image is the squared modulus of the Fourier transform of the
    field leaving the screen. Every screen mode, including the dominant
    low-frequency ones, perturbs this image, which is what makes screen
    regression from a single intensity pattern feasible.
``free``
    The image is the intensity after a short free-space leg of ``z_obs``
    meters. Over such a leg the phase-to-intensity conversion of a mode at
    spatial frequency kappa scales like ``kappa^2 z / (2 k0)``, so the
    dominant low-frequency screen content is nearly invisible; kept for
    comparison.

In both modes the compensation/evaluation plane (the "receiver") is the
field ``z_obs`` meters past the screen. Screens are encoded to gray scale
over a per-level fixed range ``(lo, hi) = (-4 sigma, +4 sigma)`` where
sigma is that level's theoretical screen standard deviation; a fixed range
keeps decoding well defined at inference time. Everything is reproducible
from (base_seed, sample id).
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, CorruptSampleError, DomainError
from .field import (
    ComplexField,
    GridSpec,
    PhaseScreen,
    apply_phase,
    intensity,
    make_vortex_beam,
    normalize_image,
)
from .images import atomic_write_bytes, export_pgm, import_pgm
from .propagation import make_kernel, propagate
from .turbulence import ScreenRng, TurbulenceParams, make_screen, screen_variance, standard_levels

MANIFEST_NAME = "manifest.txt"
SPLITS = ("train", "test")
OBSERVATIONS = ("fourier", "free")
ENCODING_SIGMA_SPAN = 4.0

# quiet-ocean dissipation for the desk protocol: epsilon = 1e-9 m^2/s^3 with
# the matching Kolmogorov inner scale (nu^3/epsilon)^(1/4) for seawater.
# The larger inner scale softens the high-frequency screen tail so the
# desk-scale regression stays learnable at the strongest level.
DESK_EPSILON = 1e-9
DESK_ETA = 5.83e-3
DESK_WAIST = 2.0e-3


def encode_screen(phase: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Map phase values into [0, 1] over a fixed range, clipping outliers.

    A degenerate range (lo == hi, the zero-turbulence case) encodes to a
    uniform 0.5 gray; decoding then returns lo everywhere.
    """
    if hi < lo:
        raise DomainError(f"invalid encoding range ({lo}, {hi})")
    if hi == lo:
        return np.full_like(np.asarray(phase, dtype=np.float64), 0.5)
    return np.clip((np.asarray(phase, dtype=np.float64) - lo) / (hi - lo), 0.0, 1.0)


def decode_screen(img: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Invert :func:`encode_screen`: ``phase = lo + img * (hi - lo)``."""
    if hi < lo:
        raise DomainError(f"invalid encoding range ({lo}, {hi})")
    return lo + np.asarray(img, dtype=np.float64) * (hi - lo)


@dataclass(frozen=True)
class Sample:
    """One dataset element, images in [0, 1]."""

    id: int
    level_index: int
    seed: int
    distorted_img: np.ndarray
    gt_screen_img: np.ndarray
    encoding: tuple[float, float]


@dataclass(frozen=True)
class DatasetConfig:
    """Generation parameters; fully determines a dataset given a seed."""

    grid: GridSpec
    levels: tuple[TurbulenceParams, ...]
    count_per_level: int
    train_per_level: int
    ell: int = -3
    waist: float = 3.5e-3
    z_obs: float = 0.1
    base_seed: int = 0
    observation: str = "fourier"

    def __post_init__(self):
        if self.count_per_level < 2:
            raise ConfigError("count_per_level must be at least 2")
        if not (0 < self.train_per_level < self.count_per_level):
            raise ConfigError("train_per_level must split the per-level count")
        if self.z_obs <= 0:
            raise ConfigError("observation distance must be positive")
        if self.observation not in OBSERVATIONS:
            raise ConfigError(
                f"unknown observation mode {self.observation!r}, expected {OBSERVATIONS}"
            )


@dataclass
class Manifest:
    """Parsed manifest: config plus encoding ranges and file hashes."""

    config: DatasetConfig
    encodings: list[tuple[float, float]]
    hashes: dict[str, str]

    @property
    def total(self) -> int:
        return self.config.count_per_level * len(self.config.levels)


def desk_config(base_seed: int = 7, observation: str = "fourier") -> DatasetConfig:
    """The desk-scale protocol: 64 x 64 grids, 600 samples per level.

    Uses quiet-ocean dissipation defaults and a 2 mm beam waist; these keep
    the strongest level learnable by the reference network size while the
    four levels stay strictly ordered in distortion strength.
    """
    grid = GridSpec(64, 0.01 / 64, 633e-9)
    levels = tuple(standard_levels(eta=DESK_ETA, epsilon=DESK_EPSILON))
    return DatasetConfig(
        grid=grid,
        levels=levels,
        count_per_level=600,
        train_per_level=500,
        waist=DESK_WAIST,
        base_seed=base_seed,
        observation=observation,
    )


def paper_config(base_seed: int = 7, observation: str = "fourier") -> DatasetConfig:
    """The full-scale protocol: 256 x 256 grids, 12000 samples per level."""
    grid = GridSpec(256, 0.01 / 256, 633e-9)
    levels = tuple(standard_levels(eta=DESK_ETA, epsilon=DESK_EPSILON))
    return DatasetConfig(
        grid=grid,
        levels=levels,
        count_per_level=12000,
        train_per_level=10000,
        waist=3.5e-3,
        base_seed=base_seed,
        observation=observation,
    )


def sample_seed(base_seed: int, sample_id: int) -> int:
    """Stable 64-bit per-sample seed derived from the base seed and id."""
    ss = np.random.SeedSequence([int(base_seed), int(sample_id)])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_ids(config: DatasetConfig, split: str, level_index: int | None = None):
    """Deterministic id layout: ids are contiguous per level, train first."""
    if split not in SPLITS:
        raise ConfigError(f"unknown split {split!r}")
    ids = []
    for lvl in range(len(config.levels)):
        if level_index is not None and lvl != level_index:
            continue
        base = lvl * config.count_per_level
        if split == "train":
            ids.extend(range(base, base + config.train_per_level))
        else:
            ids.extend(range(base + config.train_per_level, base + config.count_per_level))
    return ids


def level_of_id(config: DatasetConfig, sample_id: int) -> int:
    return sample_id // config.count_per_level


def synthesize_fields(
    config: DatasetConfig, sample_id: int
) -> tuple[PhaseScreen, ComplexField, ComplexField]:
    """Regenerate (screen, field at screen plane, field at receiver) for an id."""
    level = level_of_id(config, sample_id)
    rng = ScreenRng(sample_seed(config.base_seed, sample_id))
    screen = make_screen(config.levels[level], config.grid, rng)
    beam = make_vortex_beam(config.grid, config.ell, config.waist)
    at_screen = apply_phase(beam, screen)
    kernel = make_kernel(config.grid, config.z_obs)
    receiver = propagate(at_screen, kernel)
    return screen, at_screen, receiver


def encoding_range(params: TurbulenceParams, grid: GridSpec) -> tuple[float, float]:
    """Fixed per-level encoding span, +/- 4 theoretical sigma."""
    sigma = float(np.sqrt(screen_variance(params, grid)))
    return (-ENCODING_SIGMA_SPAN * sigma, ENCODING_SIGMA_SPAN * sigma)


def observed_intensity(
    at_screen: ComplexField, receiver: ComplexField, observation: str
) -> np.ndarray:
    """The raw camera image for a given observation mode."""
    if observation == "fourier":
        spectrum = np.fft.fftshift(np.fft.fft2(at_screen.values, norm="ortho"))
        return np.abs(spectrum) ** 2
    if observation == "free":
        return intensity(receiver)
    raise ConfigError(f"unknown observation mode {observation!r}")


def synthesize_sample(config: DatasetConfig, sample_id: int) -> Sample:
    """Build one sample in memory; deterministic in (base_seed, id)."""
    level = level_of_id(config, sample_id)
    lo, hi = encoding_range(config.levels[level], config.grid)
    screen, at_screen, receiver = synthesize_fields(config, sample_id)
    img = observed_intensity(at_screen, receiver, config.observation)
    if not np.all(np.isfinite(img)):
        raise DomainError(
            f"non-finite intensity for sample {sample_id} "
            f"(seed {sample_seed(config.base_seed, sample_id)})"
        )
    return Sample(
        id=sample_id,
        level_index=level,
        seed=sample_seed(config.base_seed, sample_id),
        distorted_img=normalize_image(img),
        gt_screen_img=encode_screen(screen.phase, lo, hi),
        encoding=(lo, hi),
    )


def _split_of_id(config: DatasetConfig, sample_id: int) -> str:
    offset = sample_id % config.count_per_level
    return "train" if offset < config.train_per_level else "test"


def _relpaths(config: DatasetConfig, sample_id: int) -> tuple[str, str]:
    split = _split_of_id(config, sample_id)
    return (f"{split}/{sample_id}_x.pgm", f"{split}/{sample_id}_y.pgm")


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def generate_dataset(config: DatasetConfig, out_dir, workers: int | None = None) -> Manifest:
    """Generate and persist the full dataset, returning its manifest.

    Samples are independent, so generation parallelizes over a thread pool
    when ``workers`` (or the VORTEXAO_THREADS environment variable) asks for
    it; results are written per sample and the manifest last, so an
    interrupted run never leaves a manifest pointing at missing files.
    """
    out_dir = os.fspath(out_dir)
    for split in SPLITS:
        os.makedirs(os.path.join(out_dir, split), exist_ok=True)
    if workers is None:
        workers = int(os.environ.get("VORTEXAO_THREADS", "1"))

    all_ids = list(range(config.count_per_level * len(config.levels)))

    def emit(sample_id: int) -> tuple[str, str, str, str]:
        sample = synthesize_sample(config, sample_id)
        rel_x, rel_y = _relpaths(config, sample_id)
        export_pgm(sample.distorted_img, os.path.join(out_dir, rel_x))
        export_pgm(sample.gt_screen_img, os.path.join(out_dir, rel_y))
        return (
            rel_x,
            _sha256_file(os.path.join(out_dir, rel_x)),
            rel_y,
            _sha256_file(os.path.join(out_dir, rel_y)),
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(emit, all_ids))
    else:
        results = [emit(i) for i in all_ids]

    hashes: dict[str, str] = {}
    for rel_x, hx, rel_y, hy in results:
        hashes[rel_x] = hx
        hashes[rel_y] = hy
    encodings = [encoding_range(p, config.grid) for p in config.levels]
    manifest = Manifest(config, encodings, hashes)
    atomic_write_bytes(
        os.path.join(out_dir, MANIFEST_NAME), _render_manifest(manifest).encode("ascii")
    )
    return manifest


def _render_manifest(manifest: Manifest) -> str:
    c = manifest.config
    lines = [
        "format_version = 1",
        f"base_seed = {c.base_seed}",
        f"grid_n = {c.grid.n}",
        f"grid_dx = {c.grid.dx!r}",
        f"wavelength = {c.grid.wavelength!r}",
        f"ell = {c.ell}",
        f"waist = {c.waist!r}",
        f"z_obs = {c.z_obs!r}",
        f"observation = {c.observation}",
        f"levels = {len(c.levels)}",
        f"count_per_level = {c.count_per_level}",
        f"train_per_level = {c.train_per_level}",
    ]
    for i, (params, (lo, hi)) in enumerate(zip(c.levels, manifest.encodings)):
        lines.append(f"level{i}.cn2 = {params.cn2!r}")
        lines.append(f"level{i}.epsilon = {params.epsilon!r}")
        lines.append(f"level{i}.chi_t = {params.chi_t!r}")
        lines.append(f"level{i}.tau = {params.tau!r}")
        lines.append(f"level{i}.eta = {params.eta!r}")
        lines.append(f"level{i}.z = {params.z!r}")
        lines.append(f"level{i}.k0 = {params.k0!r}")
        lines.append(f"level{i}.lo = {lo!r}")
        lines.append(f"level{i}.hi = {hi!r}")
    for rel in sorted(manifest.hashes):
        lines.append(f"hash/{rel} = {manifest.hashes[rel]}")
    return "\n".join(lines) + "\n"


def _parse_kv(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"manifest line {lineno} is not 'key = value': {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def load_manifest(root) -> Manifest:
    """Parse the manifest under a dataset root directory."""
    path = os.path.join(os.fspath(root), MANIFEST_NAME)
    if not os.path.exists(path):
        raise ConfigError(f"no manifest at {path}")
    with open(path, "r", encoding="ascii") as fh:
        entries = _parse_kv(fh.read())
    try:
        grid = GridSpec(
            int(entries["grid_n"]), float(entries["grid_dx"]), float(entries["wavelength"])
        )
        n_levels = int(entries["levels"])
        levels = []
        encodings = []
        for i in range(n_levels):
            levels.append(
                TurbulenceParams(
                    cn2=float(entries[f"level{i}.cn2"]),
                    epsilon=float(entries[f"level{i}.epsilon"]),
                    chi_t=float(entries[f"level{i}.chi_t"]),
                    tau=float(entries[f"level{i}.tau"]),
                    eta=float(entries[f"level{i}.eta"]),
                    z=float(entries[f"level{i}.z"]),
                    k0=float(entries[f"level{i}.k0"]),
                )
            )
            encodings.append((float(entries[f"level{i}.lo"]), float(entries[f"level{i}.hi"])))
        config = DatasetConfig(
            grid=grid,
            levels=tuple(levels),
            count_per_level=int(entries["count_per_level"]),
            train_per_level=int(entries["train_per_level"]),
            ell=int(entries["ell"]),
            waist=float(entries["waist"]),
            z_obs=float(entries["z_obs"]),
            base_seed=int(entries["base_seed"]),
            observation=entries.get("observation", "fourier"),
        )
    except KeyError as exc:
        raise ConfigError(f"manifest missing key {exc}") from exc
    hashes = {
        key[len("hash/") :]: value
        for key, value in entries.items()
        if key.startswith("hash/")
    }
    return Manifest(config, encodings, hashes)


def load_split(
    manifest: Manifest, split: str, root, level_index: int | None = None
) -> list[Sample]:
    """Load one split eagerly, ordered by id, verifying file hashes."""
    root = os.fspath(root)
    config = manifest.config
    samples = []
    for sid in sample_ids(config, split, level_index):
        level = level_of_id(config, sid)
        rel_x, rel_y = _relpaths(config, sid)
        for rel in (rel_x, rel_y):
            path = os.path.join(root, rel)
            if rel not in manifest.hashes:
                raise CorruptSampleError(f"{rel} not recorded in the manifest")
            digest = _sha256_file(path)
            if digest != manifest.hashes[rel]:
                raise CorruptSampleError(f"{rel}: sha256 mismatch, file corrupted")
        samples.append(
            Sample(
                id=sid,
                level_index=level,
                seed=sample_seed(config.base_seed, sid),
                distorted_img=import_pgm(os.path.join(root, rel_x)),
                gt_screen_img=import_pgm(os.path.join(root, rel_y)),
                encoding=manifest.encodings[level],
            )
        )
    return samples


def training_pairs(samples: list[Sample]) -> list[tuple[np.ndarray, np.ndarray]]:
    """(distorted intensity, encoded screen) pairs in sample order."""
    return [(s.distorted_img, s.gt_screen_img) for s in samples]
