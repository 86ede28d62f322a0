from kdnav.evaluation.metrics import energy_efficiency, extra_distance, success_rate
from kdnav.evaluation.benchmark import BenchmarkReport, run_benchmark
from kdnav.evaluation.export import (
    report_table,
    histogram_export,
    load_report,
    save_report,
    trace_from_text,
    trace_to_text,
)

__all__ = [
    "success_rate",
    "extra_distance",
    "energy_efficiency",
    "BenchmarkReport",
    "run_benchmark",
    "trace_to_text",
    "trace_from_text",
    "histogram_export",
    "save_report",
    "load_report",
    "report_table",
]
