"""Photometric augmentation of 8-bit RGB crops.

The default pipeline is the seven-step GDR-Net style recipe: coarse dropout,
Gaussian blur, additive offsets, inversion, two multiplicative gains and a
linear contrast change, each applied with its own probability and in this
order. Randomness comes from one generator with a fixed draw order: first
one uniform per step decides whether it fires, then each firing step draws
its parameters. Pixel values stay floating point (clamped to [0, 255] after
every step) and are rounded back to uint8 once at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class AugStep:
    probability: float
    function: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {self.probability}")
        if self.function not in _STEP_FUNCS:
            raise ValueError(f"unknown augmentation {self.function!r}")

    def to_dict(self):
        return {"probability": self.probability, "function": self.function, "parameters": dict(self.parameters)}

    @classmethod
    def from_dict(cls, d):
        params = {k: tuple(v) if isinstance(v, list) else v for k, v in d.get("parameters", {}).items()}
        return cls(float(d["probability"]), d["function"], params)


@dataclass(frozen=True)
class AugSpec:
    steps: tuple

    def to_dict(self):
        return {"steps": [s.to_dict() for s in self.steps]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(AugStep.from_dict(s) for s in d["steps"]))

    @classmethod
    def default(cls):
        return DEFAULT_AUG_SPEC


def _coarse_dropout(img, rng, p, size_percent, per_channel=False):
    H, W, C = img.shape
    gh = max(1, int(round(H * size_percent)))
    gw = max(1, int(round(W * size_percent)))
    shape = (gh, gw, C) if per_channel else (gh, gw, 1)
    keep = rng.random(shape) >= p
    # Nearest-neighbour upsampling of the low-resolution keep mask.
    ry = (np.arange(H) * gh) // H
    rx = (np.arange(W) * gw) // W
    keep = keep[ry][:, rx]
    return img * keep, {"dropped_fraction": float(1.0 - keep.mean())}


def _gaussian_blur(img, rng, sigma_max):
    sigma = sigma_max * rng.random()
    if sigma < 0.01:
        return img, {"sigma": sigma}
    return ndimage.gaussian_filter(img, sigma=(sigma, sigma, 0.0), mode="nearest"), {"sigma": sigma}


def _channel_values(rng, C, per_channel, draw):
    if rng.random() < float(per_channel):
        return draw(C)
    return np.repeat(draw(1), C)


def _add(img, rng, value, per_channel=0.0):
    lo, hi = value
    offs = _channel_values(rng, img.shape[2], per_channel, lambda n: rng.integers(lo, hi + 1, size=n).astype(float))
    return img + offs, {"offsets": offs.tolist()}


def _invert(img, rng, p, per_channel=False):
    C = img.shape[2]
    flags = rng.random(C) < p if per_channel else np.repeat(rng.random() < p, C)
    out = np.where(flags, 255.0 - img, img)
    return out, {"inverted": flags.tolist()}


def _multiply(img, rng, mul, per_channel=0.0):
    lo, hi = mul
    f = _channel_values(rng, img.shape[2], per_channel, lambda n: rng.uniform(lo, hi, size=n))
    return img * f, {"factors": f.tolist()}


def _linear_contrast(img, rng, alpha, per_channel=0.0):
    lo, hi = alpha
    a = _channel_values(rng, img.shape[2], per_channel, lambda n: rng.uniform(lo, hi, size=n))
    return 128.0 + a * (img - 128.0), {"alphas": a.tolist()}


_STEP_FUNCS = {
    "coarse_dropout": _coarse_dropout,
    "gaussian_blur": _gaussian_blur,
    "add": _add,
    "invert": _invert,
    "multiply": _multiply,
    "linear_contrast": _linear_contrast,
}

DEFAULT_AUG_SPEC = AugSpec(
    (
        AugStep(0.5, "coarse_dropout", {"p": 0.2, "size_percent": 0.05}),
        AugStep(0.5, "gaussian_blur", {"sigma_max": 1.2}),
        AugStep(0.5, "add", {"value": (-25, 25), "per_channel": 0.3}),
        AugStep(0.3, "invert", {"p": 0.2, "per_channel": True}),
        AugStep(0.5, "multiply", {"mul": (0.6, 1.4), "per_channel": 0.5}),
        AugStep(0.5, "multiply", {"mul": (0.6, 1.4)}),
        AugStep(0.5, "linear_contrast", {"alpha": (0.5, 2.2), "per_channel": 0.3}),
    )
)


def planned_steps(spec: AugSpec, seed):
    """Which steps fire for ``seed`` (the first draws of the generator)."""
    rng = np.random.default_rng(seed)
    return [bool(f) for f in rng.random(len(spec.steps)) < [s.probability for s in spec.steps]]


def apply_photometric_aug(image, spec: AugSpec = DEFAULT_AUG_SPEC, seed=0, trace=None):
    """Augment an (H, W, 3) uint8 image; deterministic given ``seed``.

    If ``trace`` is a list, one dict per fired step is appended with the
    drawn parameters.
    """
    img = np.asarray(image)
    if img.ndim != 3 or img.dtype != np.uint8:
        raise ValueError("expected an (H, W, C) uint8 image")
    rng = np.random.default_rng(seed)
    fire = rng.random(len(spec.steps)) < [s.probability for s in spec.steps]
    if not fire.any():
        return img.copy()
    out = img.astype(np.float64)
    for step, on in zip(spec.steps, fire):
        if not on:
            continue
        out, info = _STEP_FUNCS[step.function](out, rng, **step.parameters)
        out = np.clip(out, 0.0, 255.0)
        if trace is not None:
            trace.append({"function": step.function, **info})
    return np.rint(out).astype(np.uint8)


def augment_batch(images, spec: AugSpec = DEFAULT_AUG_SPEC, seed=0):
    """Per-image seeds are ``seed ^ index`` so any image can be replayed alone."""
    return [apply_photometric_aug(im, spec, seed ^ i) for i, im in enumerate(images)]
