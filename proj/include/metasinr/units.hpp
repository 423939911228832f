#ifndef METASINR_UNITS_HPP
#define METASINR_UNITS_HPP

#include <cmath>

namespace metasinr {

inline constexpr double speed_of_light = 299792458.0;  // m/s

// All internal computation is in linear units (watts, meters, dimensionless
// gains). dB appears only at the config/CLI boundary.
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

// Thermal noise floor at -174 dBm/Hz, no noise figure.
inline double thermal_noise_watts(double bandwidth_hz) {
    return dbm_to_watts(-174.0 + 10.0 * std::log10(bandwidth_hz));
}

// Free-space path loss at 1 m: L(1m) = (4 pi f / c)^2.
inline double freespace_intercept(double carrier_freq_hz) {
    const double x = 4.0 * M_PI * carrier_freq_hz / speed_of_light;
    return x * x;
}

}  // namespace metasinr

#endif
