from .composition import (
    ThresholdSet,
    calibrate_thresholds,
    overall_predict,
    system_predictions,
    threshold_for_fpr,
)
from .evaluation import (
    EvalReport,
    GroupFairness,
    average_precision,
    evaluate,
    evaluate_predictions,
    fpr_gap,
    roc_auc,
)
