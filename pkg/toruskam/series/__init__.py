from .algebra import (
    apply_linear,
    apply_linear_inverse,
    cauchy_bound_check,
    compose,
    compose_with_linear,
    dilate,
    eval,
    jet_truncate,
    laurent_from_function,
    linear_map,
    mul,
    norm_upper,
    sample_domain,
    sampled_sup,
)
from .deck import DeckSystem, LinearDeck
from .exceptions import IncompatibleSeries, NotNearIdentity, PBandOverflow, SeriesException, ZeroHCoordinate
from .io import load_series, save_series, series_from_dict, series_to_dict
from .series import TaylorLaurentSeries, check_band
