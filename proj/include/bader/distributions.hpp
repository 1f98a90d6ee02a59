#ifndef BADER_DISTRIBUTIONS_HPP
#define BADER_DISTRIBUTIONS_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

#include "rng.hpp"

/**
 * @file distributions.hpp
 * @brief Log densities and variates shared by the samplers.
 */

namespace bader {

inline constexpr double log_two_pi = 1.8378770664093454835606594728112;

inline double normal_logpdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (log_two_pi + std::log(var) + d * d / var);
}

inline double poisson_logpmf(std::int64_t k, double rate) {
    const double kd = static_cast<double>(k);
    if (k == 0) {
        return -rate;
    }
    return kd * std::log(rate) - rate - std::lgamma(kd + 1);
}

/**
 * log Gamma(r + k) - log Gamma(r), accurate when r is large relative to k.
 * For r below 100 the direct difference is used; above, the Stirling series is differenced term by term
 * so the huge common part of the two log-gamma values never materializes.
 */
inline double log_gamma_ratio(double r, double k) {
    if (k == 0) {
        return 0;
    }
    if (r < 100) {
        return std::lgamma(r + k) - std::lgamma(r);
    }
    const double rk = r + k;
    double out = (r - 0.5) * std::log1p(k / r) + k * std::log(rk) - k;
    out += (1.0 / rk - 1.0 / r) / 12.0;
    out -= (1.0 / (rk * rk * rk) - 1.0 / (r * r * r)) / 360.0;
    out += (1.0 / std::pow(rk, 5) - 1.0 / std::pow(r, 5)) / 1260.0;
    return out;
}

/**
 * Negative binomial log-pmf with mean `mean` and squared coefficient of variation `scv` of the mixing gamma.
 * Size r = 1/scv, success probability r/(r + mean); variance is mean + mean^2 * scv.
 */
inline double nb_logpmf(std::int64_t k, double mean, double scv) {
    const double r = 1.0 / scv;
    const double kd = static_cast<double>(k);
    // r*log(r/(r+M)) = -r*log1p(M/r) keeps the Poisson limit (scv -> 0) exact.
    double out = -r * std::log1p(mean / r);
    if (k == 0) {
        return out;
    }
    out += log_gamma_ratio(r, kd) - std::lgamma(kd + 1);
    out += kd * (std::log(mean) - std::log(r + mean));
    return out;
}

/// Inverse gamma with the given shape and scale (density proportional to x^(-shape-1) exp(-scale/x)).
inline double draw_inverse_gamma(Stream& rng, double shape, double scale) {
    return scale / rng.gamma(shape);
}

inline double draw_beta(Stream& rng, double a, double b) {
    const double x = rng.gamma(a);
    const double y = rng.gamma(b);
    return x / (x + y);
}

}

#endif
