from .engine import (
    choose_dilation,
    residual_norm,
    run,
    sampled_conjugacy_defect,
    verify_conjugacy,
)
from .exceptions import (
    CommutationDefectTooLarge,
    InvalidParams,
    KamException,
    NoConvergence,
    ResidualOrderError,
)
from .inversion import invert_map
from .params import KamParams, ScheduleRow, check_smallness, schedule
from .report import CSV_COLUMNS, KamReport, KamRow, rows_to_csv
from .step import StepReport, conjugate, low_order_residue, newton_step, remainder_terms
