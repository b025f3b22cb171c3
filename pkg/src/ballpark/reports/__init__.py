from ..domains.designation import designate
from .checks import (
    build_report,
    callee_saved_check,
    check_function,
    designation_map,
    find_suspect_calls,
    spill_slots,
    variable_regions,
    write_records,
    writes_frame,
)
from .groundtruth import GroundTruth, ground_truth
from .metrics import aggregate_metrics, metrics_frame, precision, recall
from .models import FunctionReport, FunctionVerdict, SuspectCall, Variable, Verdict, WriteRecord, percent
from .plotting import plot_precision_by_mode

__all__ = [
    'FunctionReport',
    'FunctionVerdict',
    'GroundTruth',
    'SuspectCall',
    'Variable',
    'Verdict',
    'WriteRecord',
    'aggregate_metrics',
    'build_report',
    'callee_saved_check',
    'check_function',
    'designate',
    'designation_map',
    'find_suspect_calls',
    'ground_truth',
    'metrics_frame',
    'percent',
    'plot_precision_by_mode',
    'precision',
    'recall',
    'spill_slots',
    'variable_regions',
    'write_records',
    'writes_frame',
]
