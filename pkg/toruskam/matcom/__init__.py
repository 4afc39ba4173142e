from .exceptions import MatcomException, NotCommuting, NotSingleEigenvalue, NumericalBreakdown, SingularMatrix
from .family import CommutingFamily, TriangularizedFamily, simultaneous_triangularize
from .logs import commuting_logs, flow_map, log_upper_triangular, principal_log
