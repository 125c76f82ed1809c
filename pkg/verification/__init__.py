from .eo_tables import (
    JointTable,
    NonOverlapReport,
    check_overall_eo,
    check_overconditioned_eo,
    coupled_slice,
    non_overlap_property_sweep,
    overall_gap,
    overconditioned_gaps,
    random_non_overlapping_table,
    random_violating_table,
)
from .oracles import (
    brute_force_average_precision,
    brute_force_mmd_sq,
    brute_force_roc_auc,
    failed_oracles,
    finite_difference_grad,
    oracle_checks,
    relative_error,
)
