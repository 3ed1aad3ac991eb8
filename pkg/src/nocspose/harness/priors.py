"""Pre-computed 2D detections used as location priors for cropping."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from ..errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LocationPrior:
    image_id: int
    obj_id: str
    bbox: tuple  # (x, y, w, h) pixels
    score: float


def load_location_priors(path, width, height):
    """Read ``[{image_id, obj_id, bbox: [x, y, w, h], score}, ...]``.

    Boxes are clamped to the image with a warning; boxes that miss the image
    entirely are dropped with a warning. Scores outside [0, 1] and malformed
    records raise ConfigError.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, list):
        raise ConfigError(f"{path}: expected a JSON array of detections")

    priors = []
    for i, rec in enumerate(doc):
        try:
            x, y, w, h = (float(v) for v in rec["bbox"])
            score = float(rec["score"])
            image_id = int(rec["image_id"])
            obj_id = str(rec["obj_id"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"{path}: detection #{i} is malformed ({e})") from e
        if not 0.0 <= score <= 1.0:
            raise ConfigError(f"{path}: detection #{i} has score {score} outside [0, 1]")
        if w <= 0 or h <= 0:
            raise ConfigError(f"{path}: detection #{i} has non-positive box size")
        x0, y0 = max(x, 0.0), max(y, 0.0)
        x1, y1 = min(x + w, float(width)), min(y + h, float(height))
        if x1 <= x0 or y1 <= y0:
            logger.warning("detection #%d (image %d, obj %s) lies outside the image; rejected", i, image_id, obj_id)
            continue
        if (x0, y0, x1, y1) != (x, y, x + w, y + h):
            logger.warning("detection #%d (image %d, obj %s) clamped to the image", i, image_id, obj_id)
        priors.append(LocationPrior(image_id, obj_id, (x0, y0, x1 - x0, y1 - y0), score))
    return priors
