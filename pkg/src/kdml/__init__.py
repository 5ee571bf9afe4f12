"""Knowledge-driven channel estimation for time/frequency-selective OFDM links.

A classical pilot estimator (LS or MMSE) produces rough channel estimates that
a small recurrent network then refines along the time axis.
"""

from kdml.errors import ConfigError, InputError, KdmlError, NumericalError

__version__ = "0.1.0"

__all__ = ["ConfigError", "InputError", "KdmlError", "NumericalError", "__version__"]
