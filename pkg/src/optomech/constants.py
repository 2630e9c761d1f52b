"""Physical constants used throughout the toolkit (CODATA 2018, SI units).

Tests and user code should reference these names instead of repeating
literals, so there is exactly one place where the values live.
"""

import math

SPEED_OF_LIGHT = 299792458.0  # m/s (exact)
BOLTZMANN = 1.380649e-23      # J/K (exact)
PLANCK = 6.62607015e-34       # J*s (exact)
HBAR = PLANCK / (2.0 * math.pi)
