"""Carbon cost pass-through estimation for zonal day-ahead electricity markets.

The package builds daily market variables from hourly data, screens them
for stationarity, and estimates how much of the carbon allowance cost is
passed through to the wholesale electricity price: an AR-augmented linear
model with Newey-West inference, quantile-regression coefficient paths,
a spline-smooth demand robustness model, and the coal/gas switching price.
"""

__version__ = "0.1.0"

from .errors import CptrError, NumericalError, ValidationError

__all__ = ["CptrError", "NumericalError", "ValidationError", "__version__"]
