#pragma once

// Unit conversions shared by every module. Public interfaces take dBm, dBm/Hz,
// kHz and ms; everything below converts to SI once, here.

#include <cmath>

namespace hcd::units {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// dBm -> W (also dBm/Hz -> W/Hz).
inline double dbm_to_watt(double dbm) { return db_to_linear(dbm - 30.0); }

inline constexpr double khz_to_hz(double khz) { return khz * 1e3; }
inline constexpr double hz_to_khz(double hz) { return hz * 1e-3; }
inline constexpr double ms_to_s(double ms) { return ms * 1e-3; }
inline constexpr double s_to_ms(double s) { return s * 1e3; }

inline constexpr double kLog2E = 1.4426950408889634074;  // log2(e)

}  // namespace hcd::units
