"""Wall-clock timing of the geometric pose stage."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

from ..errors import InsufficientDataError, NoConsensusError
from ..pnp import extract_correspondences, ransac_pnp
from .config import ExperimentConfig
from .dataset import load_index, sample_seed
from .sweep import load_sample

REFERENCE_RANSAC_PNP_S = 0.050
STAGES = ("extract", "ransac_pnp")
MIN_RUNS = 100


@dataclass
class TimingReport:
    runs: int
    mean_s: dict
    max_correspondences: int
    failures: int
    reference_ransac_pnp_s: float = REFERENCE_RANSAC_PNP_S

    @property
    def within_reference(self):
        return self.mean_s["ransac_pnp"] <= self.reference_ransac_pnp_s

    def to_dict(self):
        return {
            "runs": self.runs,
            "stages": list(STAGES),
            "mean_s": {s: self.mean_s[s] for s in STAGES},
            "max_correspondences": self.max_correspondences,
            "failures": self.failures,
            "reference_ransac_pnp_s": self.reference_ransac_pnp_s,
            "within_reference": self.within_reference,
        }

    def format(self):
        lines = [f"{'stage':<12} {'mean (s)':>10}"]
        for s in STAGES:
            lines.append(f"{s:<12} {self.mean_s[s]:>10.5f}")
        lines.append(
            f"ransac_pnp reference {self.reference_ransac_pnp_s:.3f} s; measured "
            f"{self.mean_s['ransac_pnp']:.5f} s over {self.runs} runs "
            f"(<= {self.max_correspondences} correspondences, {self.failures} failed solves)"
        )
        return "\n".join(lines)


def time_pipeline(config: ExperimentConfig, dataset_dir=None, runs=None, out_path=None) -> TimingReport:
    """Mean per-instance seconds for correspondence extraction and RANSAC+EPnP.

    Cycles over the dataset's clean crop maps until ``runs`` instances have
    been timed (at least 100). Loading from disk is outside the timed region.
    """
    dataset_dir = Path(dataset_dir or config.output_dir)
    runs = max(MIN_RUNS, runs if runs is not None else config.timing_runs)
    index = load_index(dataset_dir)
    if not index["samples"]:
        raise InsufficientDataError(f"dataset at {dataset_dir} has no samples")
    loaded = [load_sample(dataset_dir, rec) for rec in index["samples"]]

    totals = {s: 0.0 for s in STAGES}
    max_n = 0
    failures = 0
    for i in range(runs):
        meta, cmap = loaded[i % len(loaded)]
        params = replace(config.ransac, seed=sample_seed(config.seed, i, 2))
        t0 = time.perf_counter()
        corrs = extract_correspondences(cmap, meta["crop"], meta["nocs_transform"], config.stride)
        t1 = time.perf_counter()
        try:
            ransac_pnp(corrs, meta["intrinsics"], params)
        except (NoConsensusError, InsufficientDataError):
            failures += 1
        t2 = time.perf_counter()
        totals["extract"] += t1 - t0
        totals["ransac_pnp"] += t2 - t1
        max_n = max(max_n, len(corrs))

    report = TimingReport(runs, {s: totals[s] / runs for s in STAGES}, max_n, failures)
    out_path = Path(out_path or dataset_dir / "timing.json")
    out_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return report

