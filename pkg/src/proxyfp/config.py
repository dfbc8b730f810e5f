"""Pipeline configuration: flat key=value sections, UTF-8, round-trippable.

One PipelineConfig instance carries every tunable used by the pipeline so
that a single file plus a master seed reproduces a full experiment.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

N_CLASSES = 5


@dataclass
class PipelineConfig:
    # [image]
    height: int = 200
    width: int = 136

    # [latent] reshape geometry for projection (rows x cols, row-major)
    latent_rows: int = 100
    latent_cols: int = 136

    # [corpus]
    subjects_per_class: int = 25
    impressions_per_subject: int = 4
    ridge_frequency: float = 0.1
    ridge_frequency_jitter: float = 0.012
    max_translation_px: float = 1.5
    max_rotation_deg: float = 1.0
    elastic_amplitude_px: float = 0.6
    contrast_jitter: float = 0.08

    # [training]
    ae_epochs: int = 30
    ae_batch_size: int = 16
    ae_learning_rate: float = 1e-3
    decoder_epochs: int = 40
    decoder_batch_size: int = 16
    decoder_learning_rate: float = 1e-3
    heldout_fraction: float = 0.2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    # [matching]
    patch_size: int = 10
    ssim_k1: float = 0.01
    ssim_k2: float = 0.03
    match_max_distance_px: float = 12.0
    match_max_angle_deg: float = 20.0
    match_angle_cost_px_per_rad: float = 10.0
    keypoint_border_px: int = 8

    # [protocol]
    decision_threshold: float = 0.70

    # [eval]
    impostor_pair_cap: int = 20000

    # [run]
    master_seed: int = 12345
    threads: int = 0
    out_dir: str = "out"
    corpus_subdir: str = "corpus"
    models_subdir: str = "models"
    matrices_subdir: str = "matrices"
    store_subdir: str = "store"
    reports_subdir: str = "reports"

    _SECTIONS = {
        "image": ("height", "width"),
        "latent": ("latent_rows", "latent_cols"),
        "corpus": (
            "subjects_per_class",
            "impressions_per_subject",
            "ridge_frequency",
            "ridge_frequency_jitter",
            "max_translation_px",
            "max_rotation_deg",
            "elastic_amplitude_px",
            "contrast_jitter",
        ),
        "training": (
            "ae_epochs",
            "ae_batch_size",
            "ae_learning_rate",
            "decoder_epochs",
            "decoder_batch_size",
            "decoder_learning_rate",
            "heldout_fraction",
            "adam_beta1",
            "adam_beta2",
            "adam_epsilon",
        ),
        "matching": (
            "patch_size",
            "ssim_k1",
            "ssim_k2",
            "match_max_distance_px",
            "match_max_angle_deg",
            "match_angle_cost_px_per_rad",
            "keypoint_border_px",
        ),
        "protocol": ("decision_threshold",),
        "eval": ("impostor_pair_cap",),
        "run": (
            "master_seed",
            "threads",
            "out_dir",
            "corpus_subdir",
            "models_subdir",
            "matrices_subdir",
            "store_subdir",
            "reports_subdir",
        ),
    }

    @property
    def latent_length(self) -> int:
        return self.latent_rows * self.latent_cols

    def validate(self) -> None:
        if self.height % 2 or self.width % 2:
            raise ConfigurationError("image dims must be even (2x pooling/upsampling)")
        if self.latent_rows != self.height // 2 or self.latent_cols != self.width:
            raise ConfigurationError(
                "latent reshape must be (height/2) x width to match the encoder "
                f"output layout, got {self.latent_rows}x{self.latent_cols} for "
                f"{self.height}x{self.width} images"
            )
        if self.subjects_per_class < 0 or self.impressions_per_subject < 1:
            raise ConfigurationError("corpus sizes out of range")
        if not (0.05 <= self.ridge_frequency <= 0.25):
            raise ConfigurationError("ridge_frequency outside [0.05, 0.25]")
        if self.patch_size < 1:
            raise ConfigurationError("patch_size must be >= 1")

    # -- directory helpers -------------------------------------------------

    def resolve_out(self, override: str | None = None) -> Path:
        return Path(override) if override else Path(self.out_dir)

    def corpus_dir(self, out: Path) -> Path:
        return out / self.corpus_subdir

    def models_dir(self, out: Path) -> Path:
        return out / self.models_subdir

    def matrices_dir(self, out: Path) -> Path:
        return out / self.matrices_subdir

    def store_dir(self, out: Path) -> Path:
        return out / self.store_subdir

    def reports_dir(self, out: Path) -> Path:
        return out / self.reports_subdir

    # -- serialization ------------------------------------------------------

    def dumps(self) -> str:
        parser = configparser.ConfigParser()
        for section, keys in self._SECTIONS.items():
            parser[section] = {}
            for key in keys:
                parser[section][key] = _format_value(getattr(self, key))
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "PipelineConfig":
        parser = configparser.ConfigParser()
        parser.read_string(text)
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for section in parser.sections():
            if section not in cls._SECTIONS:
                raise ConfigurationError(f"unknown config section [{section}]")
            for key, raw in parser[section].items():
                if key not in cls._SECTIONS[section]:
                    raise ConfigurationError(f"unknown config key {section}.{key}")
                kwargs[key] = _parse_value(raw, types[key])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(raw: str, typename: str):
    raw = raw.strip().strip('"').strip("'")
    if typename == "int":
        return int(raw)
    if typename == "float":
        return float(raw)
    return raw


def derive_seed(master_seed: int, *tags: int) -> int:
    """Fixed seed-splitting rule: one master seed fans out to independent
    streams keyed by integer tags, so per-subject work is order-independent."""
    ss = np.random.SeedSequence(entropy=[int(master_seed) & 0xFFFFFFFF, *[int(t) & 0xFFFFFFFF for t in tags]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
