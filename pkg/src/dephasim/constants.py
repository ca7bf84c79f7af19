"""Exact SI defining constants (2019 redefinition).

All device formulas in this package are written against these values so
that derived numbers are reproducible bit-for-bit across machines.
"""

import math

#: elementary charge [C]
ELEMENTARY_CHARGE = 1.602176634e-19

#: Planck constant [J s]
PLANCK = 6.62607015e-34

#: reduced Planck constant [J s / rad]
HBAR = PLANCK / (2.0 * math.pi)

#: Boltzmann constant [J / K]
BOLTZMANN = 1.380649e-23

#: speed of light in vacuum [m / s]
SPEED_OF_LIGHT = 299792458.0

TWO_PI = 2.0 * math.pi
