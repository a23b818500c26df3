#pragma once

#include <cstdint>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace iqm {

/// Exact rational number. Frequencies, event measures and deficits are kept
/// in this form so that normalization and additivity are identities.
using Ratio = boost::multiprecision::cpp_rational;

inline Ratio ratio(std::int64_t num, std::int64_t den) { return Ratio(num, den); }

/// Exact value of a finite double.
inline Ratio exact(double x) { return Ratio(x); }

inline double to_double(const Ratio& r) { return static_cast<double>(r); }

/// "n/d" (or "n" when d = 1).
inline std::string to_string(const Ratio& r) { return r.str(); }

inline Ratio abs(const Ratio& r) { return r < 0 ? Ratio(-r) : r; }

}  // namespace iqm
