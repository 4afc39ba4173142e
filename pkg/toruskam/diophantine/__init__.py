from .divisors import (
    RESONANCE_TOLERANCE,
    DivisorRecord,
    change_generators,
    divisor_table,
    p_vectors,
    q_vectors,
    scan_keys,
    small_divisor,
)
from .exceptions import DiophantineException, NotUnimodular, ResonantInput
from .scan import (
    DiophantineFit,
    ScanTable,
    diophantine_fit,
    divisor_scan,
    enhanced_bound_holds,
    enhanced_constant,
    nonresonance_scan,
    splitting_divisor_check,
    splitting_divisor_scan,
)
