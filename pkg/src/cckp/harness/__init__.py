from cckp.harness.experiment import ExperimentRow, ExperimentSpec, run_experiment, write_csv
from cckp.harness.instances import InstanceSpec, closed_form_target, generate_instance
from cckp.harness.scaling import scaling_summary

__all__ = [
    "ExperimentRow",
    "ExperimentSpec",
    "InstanceSpec",
    "closed_form_target",
    "generate_instance",
    "run_experiment",
    "scaling_summary",
    "write_csv",
]
