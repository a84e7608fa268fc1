#pragma once

namespace febsim::constants {

/// Elementary charge [C].
inline constexpr double elementary_charge_c = 1.602176634e-19;

/// Boltzmann constant [J/K].
inline constexpr double boltzmann_j_per_k = 1.380649e-23;

/// Boltzmann constant [eV/K] (used by the leakage temperature scaling).
inline constexpr double boltzmann_ev_per_k = 8.617333262e-5;

/// Charge unit conversion at the ENC/SNR boundaries: 1 fC = 6241.5 electrons.
inline constexpr double electrons_per_fc = 6241.5;

inline constexpr double pi = 3.14159265358979323846;

}  // namespace febsim::constants
