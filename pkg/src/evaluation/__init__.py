from .harness import (
    METRICS,
    REPORT_COLUMNS,
    EvaluationReport,
    SceneScore,
    SplitResult,
    evaluate,
    evaluate_records,
    join_by_scene,
    retention_from_csv,
)
