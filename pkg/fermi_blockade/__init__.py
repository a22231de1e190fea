from .gas import derive_scales, solve_fugacity, solve_fugacity_uniform, t_over_tf_from_mu
from .blockade import suppression, suppression_trapped, suppression_mc, suppression_series
from .observables import angular_map, axis_suppression, lifetime_factor, sweep
from .version import __version__


__all__ = ["derive_scales", "solve_fugacity", "solve_fugacity_uniform", "t_over_tf_from_mu",
           "suppression", "suppression_trapped", "suppression_mc", "suppression_series",
           "angular_map", "axis_suppression", "lifetime_factor", "sweep", "__version__"]
