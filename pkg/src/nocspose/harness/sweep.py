"""Degradation sweeps: degrade -> decode -> RANSAC+EPnP -> metrics, one CSV row each."""

from __future__ import annotations

import csv
import functools
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..camera import rotation_error_deg
from ..degrade import degrade_map
from ..errors import InsufficientDataError, NoConsensusError
from ..mapio import load_map, read_sidecar
from ..metrics import add_metric, add_recall, iou, mse, mspd, mssd
from ..pnp import extract_correspondences, ransac_pnp
from .config import ExperimentConfig
from .dataset import load_index, load_objects, sample_seed

logger = logging.getLogger(__name__)

CSV_SCHEMA = "# schema: nocspose-sweep/1"
COLUMNS = (
    "sample_id",
    "obj",
    "kind",
    "severity",
    "status",
    "n_corr",
    "n_inliers",
    "add_mm",
    "add_pass",
    "mse",
    "iou",
    "mssd_mm",
    "mspd_px",
    "rot_err_deg",
    "trans_err_mm",
    "diameter_mm",
    "img_diag_px",
)

STATUS_OK = "ok"
STATUS_NO_CONSENSUS = "no_consensus"


@functools.lru_cache(maxsize=4)
def _objects(dataset_dir):
    return load_objects(dataset_dir)


def load_sample(dataset_dir, rec):
    d = Path(dataset_dir) / rec["dir"]
    meta = read_sidecar(d / "meta.json")
    crop = load_map(d / "crop_coords.png", d / "crop_mask.png")
    return meta, crop


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _evaluate_sample(task):
    dataset_dir, idx, rec, specs, ransac, stride, seed = task
    obj = _objects(dataset_dir)[rec["obj"]]
    meta, clean = load_sample(dataset_dir, rec)
    gt = meta["pose"]
    k = meta["intrinsics"]
    rows = []
    for si, spec in enumerate(specs):
        deg_seed = sample_seed(seed, idx, si, 0)
        pnp_seed = sample_seed(seed, idx, si, 1)
        est_map = degrade_map(clean, spec, deg_seed)
        row = {
            "sample_id": rec["id"],
            "obj": rec["obj"],
            "kind": spec.kind,
            "severity": spec.severity,
            "mse": mse(est_map.coords, clean.coords),
            "iou": iou(est_map.mask, clean.mask),
            "diameter_mm": obj.info.diameter,
            "img_diag_px": k.diagonal,
        }
        corrs = extract_correspondences(est_map, meta["crop"], meta["nocs_transform"], stride)
        row["n_corr"] = len(corrs)
        try:
            est = ransac_pnp(corrs, k, replace(ransac, seed=pnp_seed))
        except (NoConsensusError, InsufficientDataError):
            row.update(
                status=STATUS_NO_CONSENSUS, n_inliers=0, add_mm=math.inf, add_pass=False,
                mssd_mm=math.inf, mspd_px=math.inf, rot_err_deg=math.inf, trans_err_mm=math.inf,
            )
        else:
            add = add_metric(gt, est.pose, obj.points, obj.info.symmetries)
            row.update(
                status=STATUS_OK,
                n_inliers=est.num_inliers,
                add_mm=add,
                add_pass=add_recall(add, obj.info),
                mssd_mm=mssd(gt, est.pose, obj.points, obj.info.symmetries),
                mspd_px=mspd(gt, est.pose, obj.points, obj.info.symmetries, k),
                rot_err_deg=rotation_error_deg(gt.rotation, est.pose.rotation),
                trans_err_mm=float(np.linalg.norm(gt.translation - est.pose.translation)),
            )
        rows.append([_fmt(row[c]) for c in COLUMNS])
    return rows


def sweep_rows(config: ExperimentConfig, dataset_dir=None, workers=None):
    """Yield CSV rows (lists of strings) in (sample, spec) order."""
    dataset_dir = str(Path(dataset_dir or config.output_dir).resolve())
    index = load_index(dataset_dir)
    tasks = [
        (dataset_dir, i, rec, tuple(config.degradations), config.ransac, config.stride, config.seed)
        for i, rec in enumerate(index["samples"])
    ]
    workers = config.workers if workers is None else workers
    if workers <= 1:
        for t in tasks:
            yield from _evaluate_sample(t)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for rows in pool.map(_evaluate_sample, tasks, chunksize=max(1, len(tasks) // (4 * workers))):
            yield from rows


def run_sweep(config: ExperimentConfig, dataset_dir=None, csv_path=None, workers=None) -> Path:
    """Write ``sweep.csv`` (one row per sample x degradation); returns its path.

    Failed solves are kept with ``status=no_consensus`` and infinite errors.
    """
    dataset_dir = Path(dataset_dir or config.output_dir)
    csv_path = Path(csv_path or dataset_dir / "sweep.csv")
    buf = io.StringIO()
    buf.write(CSV_SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    n = 0
    for row in sweep_rows(config, dataset_dir, workers):
        w.writerow(row)
        n += 1
    csv_path.write_text(buf.getvalue(), encoding="utf-8")
    logger.info("wrote %d rows to %s", n, csv_path)
    return csv_path
