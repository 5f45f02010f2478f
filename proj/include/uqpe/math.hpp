#pragma once

#include <cmath>

#include "uqpe/errors.hpp"

namespace uqpe {

inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Inverse standard normal CDF. Acklam's rational approximation polished with
// one Halley step, accurate to full double precision on (0,1).
double normal_quantile(double p);

// Error distributions supported by the location-scale machinery. Both are
// standardized to mean 0 and variance 1; the chi-squared case is (chi2_1-1)/sqrt(2).
enum class UDist { normal, chi2_standardized };

double u_dist_cdf(UDist dist, double v);
double u_dist_quantile(UDist dist, double p);

const char* u_dist_name(UDist dist);

} // namespace uqpe
