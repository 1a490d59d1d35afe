"""Physical constants.

Magnetics runs in CGS-Gaussian units (Oe, emu, erg, cm^3); circuit and
current quantities are SI (A, V, F, s).  The only place the two systems
meet is the spin-torque field, see :data:`HSTT_ERG_PER_COULOMB`.
"""

# Boltzmann constant [erg/K]
K_B = 1.380649e-16

# gyromagnetic ratio [rad / (s Oe)]
GAMMA = 1.76e7

# reduced Planck constant [erg s]
HBAR = 1.054571817e-27

# elementary charge [C]
Q_E = 1.602176634e-19

# hbar/2q [erg s / C]: multiply by a charge current in ampere and divide by
# the total moment M_s*Omega [emu] to get the spin-torque field in Oe.
HSTT_ERG_PER_COULOMB = HBAR / (2.0 * Q_E)


def thermal_energy(temperature):
    """k_B * T in erg."""
    return K_B * temperature


def stt_field(i_s, ms_omega):
    """Field-equivalent spin-torque amplitude in Oe.

    i_s is a charge-equivalent spin current in ampere, ms_omega the total
    magnetic moment M_s * Omega in emu.
    """
    return HSTT_ERG_PER_COULOMB * i_s / ms_omega
