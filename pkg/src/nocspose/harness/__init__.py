"""Experiment harness: dataset generation, degradation sweeps, reports and timing."""

from .config import ExperimentConfig, MeshEntry, config_from_dict, load_config
from .dataset import generate_dataset, load_index, load_objects
from .priors import LocationPrior, load_location_priors
from .report import read_sweep_csv, report, summarize
from .sweep import run_sweep
from .timing import time_pipeline
