"""Pipeline configuration: one flat record, validated, hashable.

Every stage derives its RNG stream deterministically from the single
root seed and its stage name, so reruns with the same config are
byte-identical.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    # synthetic data
    categories: tuple = ("box", "can", "sphere")
    per_category: int = 30
    noise_sigma: float = 0.002
    scan_points: int = 1800
    # geometry
    normals_k: int = 16
    angle_thresh_deg: float = 15.0
    dist_thresh: float | None = None          # None: 2.5x median spacing
    min_segment_points: int | None = None     # None: max(20, 3% of points)
    fpfh_radius: float | None = None          # None: 4x median spacing
    # dictionary / motifs
    dictionary_depth: int = 4
    dictionary_max_iter: int = 100
    bandwidth: float = 0.025
    # filtration / concepts
    max_steps: int = 1000
    cut_time: object = "auto"                 # "auto" (peak annexation) or float
    min_size: int = 2
    keep_equal_time: bool = True
    # classifier / cross-validation
    classifier_epochs: int = 300
    classifier_step: float = 0.5
    classifier_regularization: float = 1e-4
    split_ratio: float = 0.75
    repetitions: int = 5
    # t-SNE / region grid
    tsne_perplexity: float = 12.0
    tsne_iterations: int = 500
    tsne_step: float = 10.0
    grid_k_fraction: float = 0.05
    grid_resolution: int = 100
    # sweep grid
    sweep_cut_times: tuple = (0.0, 0.2, 0.4, 0.6, 0.8)
    sweep_min_sizes: tuple = (2, 3, 4)

    def __post_init__(self):
        checks = [
            (self.per_category >= 1, "per_category must be >= 1"),
            (self.noise_sigma >= 0, "noise_sigma must be >= 0"),
            (self.scan_points >= 16, "scan_points must be >= 16"),
            (self.normals_k >= 3, "normals_k must be >= 3"),
            (0 < self.angle_thresh_deg < 90, "angle_thresh_deg must be in (0, 90)"),
            (self.dictionary_depth >= 1, "dictionary_depth must be >= 1"),
            (self.dictionary_max_iter >= 1, "dictionary_max_iter must be >= 1"),
            (self.bandwidth > 0, "bandwidth must be positive"),
            (self.max_steps >= 2, "max_steps must be >= 2"),
            (self.min_size >= 1, "min_size must be >= 1"),
            (self.classifier_epochs >= 1, "classifier_epochs must be >= 1"),
            (self.classifier_step > 0, "classifier_step must be positive"),
            (self.classifier_regularization >= 0,
             "classifier_regularization must be >= 0"),
            (0 < self.split_ratio < 1, "split_ratio must be in (0, 1)"),
            (self.repetitions >= 1, "repetitions must be >= 1"),
            (self.tsne_perplexity > 0, "tsne_perplexity must be positive"),
            (self.tsne_iterations >= 0, "tsne_iterations must be >= 0"),
            (self.tsne_step > 0, "tsne_step must be positive"),
            (0 < self.grid_k_fraction <= 1, "grid_k_fraction must be in (0, 1]"),
            (self.grid_resolution >= 2, "grid_resolution must be >= 2"),
        ]
        bad = [msg for ok, msg in checks if not ok]
        if self.cut_time != "auto":
            if not isinstance(self.cut_time, (int, float)) or not 0 <= self.cut_time <= 1:
                bad.append("cut_time must be 'auto' or a number in [0, 1]")
        if bad:
            raise ConfigError("; ".join(bad))
        for name in ("categories", "sweep_cut_times", "sweep_min_sizes"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path!s} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path!s} must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for name in ("categories", "sweep_cut_times", "sweep_min_sizes"):
            out[name] = list(out[name])
        return out

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()


def stage_seed(root_seed: int, stage: str) -> int:
    """Deterministic per-stage seed derived from the root seed."""
    digest = hashlib.sha256(f"{root_seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**31 - 1)
