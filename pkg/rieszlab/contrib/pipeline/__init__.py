from .config import SystemConfig, build_system, dump_config, load_config, parse_config
from .generators import CouplingLaw, generate_explicit, generate_synthetic, generate_wave, initial_state
from .pipeline import Pipeline, run_pipeline
from .report import RunReport, read_trajectory_csv, write_report
