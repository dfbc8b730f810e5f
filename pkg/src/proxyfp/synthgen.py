"""Deterministic synthetic fingerprint corpus.

Five global ridge patterns (arch, tented arch, left loop, right loop, whorl)
are synthesized from class-conditioned orientation fields. Loops, tents and
whorls use the classic zero-pole model: each core adds +1/2 arg(z - z_core)
to the doubled orientation, each delta subtracts the same. Arches use a
singularity-free analytic bow. Ridges emerge by iteratively filtering seeded
noise with a bank of orientation- and frequency-tuned Gabor kernels, then
squashing toward a binary-looking pattern.

Every function is a pure function of its arguments and seed, so corpora are
byte-reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage, signal

from .config import N_CLASSES, PipelineConfig, derive_seed
from .errors import DomainError
from . import pgmio

CLASS_NAMES = ("arch", "tented_arch", "left_loop", "right_loop", "whorl")


@dataclass(frozen=True)
class FingerprintClass:
    index: int
    name: str


CLASSES = tuple(FingerprintClass(i + 1, name) for i, name in enumerate(CLASS_NAMES))


def class_by_index(index: int) -> FingerprintClass:
    if not 1 <= index <= N_CLASSES:
        raise DomainError(f"class index {index} outside [1, {N_CLASSES}]")
    return CLASSES[index - 1]


def class_by_name(name: str) -> FingerprintClass:
    for cls in CLASSES:
        if cls.name == name:
            return cls
    raise DomainError(f"unknown class name {name!r}")


@dataclass(frozen=True)
class Singularity:
    row: float
    col: float
    kind: str  # "core" | "delta"


@dataclass(frozen=True)
class OrientationField:
    theta: np.ndarray  # H x W, radians in [0, pi)
    singularities: tuple[Singularity, ...]


@dataclass(frozen=True)
class FingerprintImage:
    pixels: np.ndarray  # H x W in [0, 1]
    fingerprint_class: FingerprintClass
    subject_id: int
    impression_id: int


@dataclass
class Corpus:
    images: list[FingerprintImage]
    subjects_per_class: int
    impressions_per_subject: int

    def by_subject(self) -> dict[int, list[FingerprintImage]]:
        grouped: dict[int, list[FingerprintImage]] = {}
        for img in self.images:
            grouped.setdefault(img.subject_id, []).append(img)
        for imgs in grouped.values():
            imgs.sort(key=lambda im: im.impression_id)
        return grouped

    def subject_class(self, subject_id: int) -> FingerprintClass:
        index = (subject_id - 1) // self.subjects_per_class + 1
        return class_by_index(index)


# -- orientation fields -------------------------------------------------------

def _uniform(rng, low, high):
    return float(rng.uniform(low, high))


def _singularity_template(cls: FingerprintClass, rng, h: int, w: int) -> list[Singularity]:
    """Randomized singularity positions inside class-specific regions."""
    if cls.name == "arch":
        return []
    if cls.name == "tented_arch":
        col = _uniform(rng, 0.42 * w, 0.58 * w)
        return [
            Singularity(_uniform(rng, 0.36 * h, 0.48 * h), col + _uniform(rng, -0.02 * w, 0.02 * w), "core"),
            Singularity(_uniform(rng, 0.68 * h, 0.80 * h), col + _uniform(rng, -0.04 * w, 0.04 * w), "delta"),
        ]
    if cls.name == "left_loop":
        core = Singularity(_uniform(rng, 0.34 * h, 0.46 * h), _uniform(rng, 0.26 * w, 0.44 * w), "core")
        delta = Singularity(core.row + _uniform(rng, 0.22 * h, 0.30 * h),
                            core.col + _uniform(rng, 0.18 * w, 0.30 * w), "delta")
        return [core, delta]
    if cls.name == "right_loop":
        core = Singularity(_uniform(rng, 0.34 * h, 0.46 * h), _uniform(rng, 0.56 * w, 0.74 * w), "core")
        delta = Singularity(core.row + _uniform(rng, 0.22 * h, 0.30 * h),
                            core.col - _uniform(rng, 0.18 * w, 0.30 * w), "delta")
        return [core, delta]
    # whorl: twin cores near the center, deltas below on both flanks
    cy = _uniform(rng, 0.40 * h, 0.50 * h)
    cx = _uniform(rng, 0.44 * w, 0.56 * w)
    gap = _uniform(rng, 0.04 * h, 0.08 * h)
    return [
        Singularity(cy - gap, cx + _uniform(rng, -0.04 * w, 0.04 * w), "core"),
        Singularity(cy + gap, cx + _uniform(rng, -0.04 * w, 0.04 * w), "core"),
        Singularity(_uniform(rng, 0.68 * h, 0.78 * h), _uniform(rng, 0.16 * w, 0.30 * w), "delta"),
        Singularity(_uniform(rng, 0.68 * h, 0.78 * h), _uniform(rng, 0.70 * w, 0.84 * w), "delta"),
    ]


def generate_orientation_field(cls: FingerprintClass | int, seed: int,
                               h: int, w: int) -> OrientationField:
    """Smooth class-conditioned ridge orientation field, angles in [0, pi)."""
    if isinstance(cls, int):
        cls = class_by_index(cls)
    if h < 32 or w < 32:
        raise DomainError(f"field dims must be >= 32, got {h}x{w}")
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)

    if cls.name == "arch":
        # singularity-free bow: horizontal flow everywhere, ridges rising
        # toward a crest row in the middle of the frame
        crest = _uniform(rng, 0.40 * h, 0.52 * h)
        center = _uniform(rng, 0.42 * w, 0.58 * w)
        amp = _uniform(rng, 0.45, 0.62)
        falloff = np.exp(-(((rows - crest) / (0.30 * h)) ** 2))
        theta = -amp * np.tanh(3.0 * (cols - center) / w) * falloff
        return OrientationField(theta=np.mod(theta, math.pi), singularities=())

    singularities = _singularity_template(cls, rng, h, w)
    doubled = np.zeros((h, w), dtype=np.float64)
    for s in singularities:
        angle = np.arctan2(rows - s.row, cols - s.col)
        doubled += angle if s.kind == "core" else -angle
    theta = np.mod(doubled / 2.0, math.pi)
    return OrientationField(theta=theta, singularities=tuple(singularities))


# -- ridge synthesis ----------------------------------------------------------

_N_ORIENT = 12


def _gabor_bank(frequency: float) -> list[np.ndarray]:
    period = 1.0 / frequency
    sigma = 0.55 * period
    radius = int(math.ceil(2.2 * sigma))
    y, x = np.mgrid[-radius : radius + 1, -radius : radius + 1].astype(np.float64)
    envelope = np.exp(-(x ** 2 + y ** 2) / (2.0 * sigma ** 2))
    kernels = []
    for n in range(_N_ORIENT):
        ridge_dir = math.pi * n / _N_ORIENT
        # the carrier wave runs across the ridges
        wave = ridge_dir + math.pi / 2.0
        carrier = np.cos(2.0 * math.pi * frequency * (x * math.cos(wave) + y * math.sin(wave)))
        k = envelope * carrier
        kernels.append(k - k.mean())  # zero DC so the iteration cannot drift
    return kernels


def _orientation_masks(theta: np.ndarray) -> list[np.ndarray]:
    """Soft per-pixel weights for each orientation bin, normalized to sum 1."""
    masks = []
    for n in range(_N_ORIENT):
        bin_angle = math.pi * n / _N_ORIENT
        d = np.abs(theta - bin_angle)
        d = np.minimum(d, math.pi - d)
        raw = (d <= (math.pi / _N_ORIENT)).astype(np.float64)
        masks.append(ndimage.gaussian_filter(raw, sigma=2.0))
    total = np.sum(masks, axis=0)
    total[total == 0.0] = 1.0
    return [m / total for m in masks]


def _foreground_mask(h: int, w: int, margin: float = 0.04, edge: float = 8.0) -> np.ndarray:
    """Soft elliptical foreground: 1 inside the print, 0 at the white border."""
    rows, cols = np.mgrid[0:h, 0:w].astype(np.float64)
    ry = (0.5 - margin) * h
    rx = (0.5 - margin) * w
    d = np.sqrt(((rows - h / 2.0) / ry) ** 2 + ((cols - w / 2.0) / rx) ** 2)
    ramp = np.clip((1.0 - d) * min(ry, rx) / edge, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(math.pi * ramp)


def synthesize_master(ofield: OrientationField, ridge_frequency: float, seed: int,
                      iterations: int = 8) -> np.ndarray:
    """Gabor-filter seeded noise along the field until ridges emerge.

    Output is an H x W image in [0, 1] with dark ridges on a light
    background, faded to white outside an elliptical foreground.
    """
    if not 0.05 <= ridge_frequency <= 0.25:
        raise DomainError(f"ridge_frequency {ridge_frequency} outside [0.05, 0.25]")
    theta = ofield.theta
    h, w = theta.shape
    rng = np.random.default_rng(seed)
    kernels = _gabor_bank(ridge_frequency)
    masks = _orientation_masks(theta)

    pattern = rng.uniform(-1.0, 1.0, size=(h, w))
    for _ in range(iterations):
        mixed = np.zeros((h, w), dtype=np.float64)
        for kernel, mask in zip(kernels, masks):
            mixed += mask * signal.fftconvolve(pattern, kernel, mode="same")
        rms = np.sqrt((mixed ** 2).mean())
        if rms == 0.0:
            break
        pattern = np.tanh(1.6 * mixed / rms)

    fg = _foreground_mask(h, w)
    ridges = 0.5 - 0.5 * np.tanh(2.2 * pattern)  # dark where pattern is positive
    image = 1.0 - fg * (1.0 - ridges)
    return np.clip(image, 0.0, 1.0)


# -- impressions ----------------------------------------------------------------

def derive_impressions(master: FingerprintImage, n: int, seed: int,
                       config: PipelineConfig | None = None) -> list[FingerprintImage]:
    """The master plus n-1 gently perturbed copies.

    Perturbations stay small so impressions remain near-registered: bounded
    translation and rotation, a mild elastic displacement field, and a
    contrast jitter. Each copy is deterministic in (seed, impression index).
    """
    if n < 1:
        raise DomainError("impression count must be >= 1")
    cfg = config or PipelineConfig()
    out = [FingerprintImage(pixels=master.pixels, fingerprint_class=master.fingerprint_class,
                            subject_id=master.subject_id, impression_id=1)]
    h, w = master.pixels.shape
    base_rows, base_cols = np.mgrid[0:h, 0:w].astype(np.float64)
    for k in range(2, n + 1):
        rng = np.random.default_rng(derive_seed(seed, k))
        angle = math.radians(rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg))
        t_row = rng.uniform(-cfg.max_translation_px, cfg.max_translation_px)
        t_col = rng.uniform(-cfg.max_translation_px, cfg.max_translation_px)
        cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
        cos_a, sin_a = math.cos(angle), math.sin(angle)
        rel_r, rel_c = base_rows - cy, base_cols - cx
        src_rows = cy + cos_a * rel_r - sin_a * rel_c + t_row
        src_cols = cx + sin_a * rel_r + cos_a * rel_c + t_col
        if cfg.elastic_amplitude_px > 0:
            disp_r = ndimage.gaussian_filter(rng.normal(size=(h, w)), sigma=12.0)
            disp_c = ndimage.gaussian_filter(rng.normal(size=(h, w)), sigma=12.0)
            disp_r *= cfg.elastic_amplitude_px / (np.abs(disp_r).max() + 1e-12)
            disp_c *= cfg.elastic_amplitude_px / (np.abs(disp_c).max() + 1e-12)
            src_rows = src_rows + disp_r
            src_cols = src_cols + disp_c
        warped = ndimage.map_coordinates(master.pixels, [src_rows, src_cols],
                                         order=1, mode="constant", cval=1.0)
        gain = 1.0 + rng.uniform(-cfg.contrast_jitter, cfg.contrast_jitter)
        shift = rng.uniform(-cfg.contrast_jitter / 2.0, cfg.contrast_jitter / 2.0)
        jittered = np.clip((warped - 0.5) * gain + 0.5 + shift, 0.0, 1.0)
        out.append(FingerprintImage(pixels=jittered, fingerprint_class=master.fingerprint_class,
                                    subject_id=master.subject_id, impression_id=k))
    return out


# -- corpus ----------------------------------------------------------------------

def build_corpus(config: PipelineConfig, progress=None) -> Corpus:
    """Full corpus: 5 classes x subjects_per_class x impressions_per_subject.

    Subject ids are contiguous per class (class 1 owns the lowest block).
    Pixels are quantized to 8 bits and scaled back so in-memory values match
    the on-disk PGM encoding exactly.
    """
    images: list[FingerprintImage] = []
    spc = config.subjects_per_class
    for cls in CLASSES:
        for s in range(spc):
            subject_id = (cls.index - 1) * spc + s + 1
            field_seed = derive_seed(config.master_seed, 1, subject_id)
            noise_seed = derive_seed(config.master_seed, 2, subject_id)
            imp_seed = derive_seed(config.master_seed, 3, subject_id)
            freq_rng = np.random.default_rng(derive_seed(config.master_seed, 4, subject_id))
            freq = config.ridge_frequency + freq_rng.uniform(
                -config.ridge_frequency_jitter, config.ridge_frequency_jitter)
            ofield = generate_orientation_field(cls, field_seed, config.height, config.width)
            master_pixels = synthesize_master(ofield, freq, noise_seed)
            master_pixels = pgmio.dequantize(pgmio.quantize(master_pixels))
            master = FingerprintImage(pixels=master_pixels, fingerprint_class=cls,
                                      subject_id=subject_id, impression_id=1)
            for imp in derive_impressions(master, config.impressions_per_subject,
                                          imp_seed, config):
                images.append(FingerprintImage(
                    pixels=pgmio.dequantize(pgmio.quantize(imp.pixels)),
                    fingerprint_class=imp.fingerprint_class,
                    subject_id=imp.subject_id,
                    impression_id=imp.impression_id,
                ))
            if progress and subject_id % 25 == 0:
                progress(f"synthesized subject {subject_id}/{spc * N_CLASSES}")
    return Corpus(images=images, subjects_per_class=spc,
                  impressions_per_subject=config.impressions_per_subject)


def corpus_image_path(root: Path, img: FingerprintImage) -> Path:
    return (root / f"class_{img.fingerprint_class.index}"
            / f"subject_{img.subject_id}" / f"imp_{img.impression_id}.pgm")


def write_corpus(corpus: Corpus, root: str | Path) -> Path:
    """Directory tree of PGM files plus a manifest.csv."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    manifest = root / "manifest.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["path", "class", "subject", "impression"])
        for img in corpus.images:
            path = corpus_image_path(root, img)
            path.parent.mkdir(parents=True, exist_ok=True)
            pgmio.write_pgm(path, img.pixels)
            writer.writerow([path.relative_to(root).as_posix(),
                             img.fingerprint_class.index,
                             img.subject_id, img.impression_id])
    return manifest


def load_corpus(root: str | Path) -> Corpus:
    root = Path(root)
    rows = []
    with open(root / "manifest.csv", newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            rows.append(row)
    images = []
    subjects = set()
    impressions = set()
    classes_of: dict[int, int] = {}
    for row in rows:
        subject = int(row["subject"])
        impression = int(row["impression"])
        cls = class_by_index(int(row["class"]))
        pixels = pgmio.read_pgm(root / row["path"])
        images.append(FingerprintImage(pixels=pixels, fingerprint_class=cls,
                                       subject_id=subject, impression_id=impression))
        subjects.add(subject)
        impressions.add(impression)
        classes_of[subject] = cls.index
    spc = len(subjects) // N_CLASSES if subjects else 0
    return Corpus(images=images, subjects_per_class=spc,
                  impressions_per_subject=max(impressions) if impressions else 0)


# -- spectral oracle helper -------------------------------------------------------

def dominant_radial_frequency(image: np.ndarray, min_frequency: float = 0.04) -> float:
    """Peak of the radially binned power spectrum, in cycles/pixel.

    Frequencies below `min_frequency` are excluded so the foreground
    envelope does not mask the ridge carrier.
    """
    img = np.asarray(image, dtype=np.float64)
    spectrum = np.abs(np.fft.fft2(img - img.mean())) ** 2
    fy = np.fft.fftfreq(img.shape[0])[:, None]
    fx = np.fft.fftfreq(img.shape[1])[None, :]
    radius = np.sqrt(fy ** 2 + fx ** 2)
    bins = np.arange(0.0, 0.5 + 0.005, 0.005)
    which = np.digitize(radius.ravel(), bins)
    power = np.bincount(which, weights=spectrum.ravel(), minlength=len(bins) + 1)
    counts = np.bincount(which, minlength=len(bins) + 1)
    counts[counts == 0] = 1
    mean_power = power / counts
    centers = bins + 0.0025
    valid = np.nonzero(centers >= min_frequency)[0]
    valid = valid[valid < len(mean_power) - 1]
    peak = valid[np.argmax(mean_power[valid + 1])]
    return float(centers[peak])
