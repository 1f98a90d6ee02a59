#ifndef BADER_TESTS_SUPPORT_HPP
#define BADER_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

// Independent numerical oracles shared by the test programs.

namespace testing_support {

/// Adaptive Gauss-Kronrod integral of f over [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

/// Nested adaptive quadrature over the rectangle [ax, bx] x [ay, by].
inline double integrate2(const std::function<double(double, double)>& f, double ax, double bx, double ay, double by) {
    return integrate([&](double x) { return integrate([&](double y) { return f(x, y); }, ay, by); }, ax, bx);
}

inline double mean(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double s = 0;
    for (double v : x) {
        s += (v - m) * (v - m);
    }
    return s / static_cast<double>(x.size() - 1);
}

/// Monte Carlo standard error of the mean of a correlated chain, by non-overlapping batch means.
inline double batch_means_se(std::span<const double> x, std::size_t batches = 50) {
    const auto size = x.size() / batches;
    std::vector<double> means;
    for (std::size_t b = 0; b < batches; ++b) {
        means.push_back(mean(x.subspan(b * size, size)));
    }
    return std::sqrt(variance(means) / static_cast<double>(batches));
}

/// Asymptotic Kolmogorov-Smirnov p-value for a sample against the uniform distribution on (0, 1).
inline double ks_uniform_pvalue(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        d = std::max({d, (static_cast<double>(i) + 1) / n - u[i], u[i] - static_cast<double>(i) / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double q = 0;
    for (int k = 1; k <= 100; ++k) {
        q += 2 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    }
    return std::clamp(q, 0.0, 1.0);
}

/// Chi-square goodness-of-fit p-value of bin counts against equal expected frequencies.
inline double chi_square_uniform_pvalue(std::span<const std::size_t> counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const double expected = total / static_cast<double>(counts.size());
    double stat = 0;
    for (auto c : counts) {
        stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
    }
    boost::math::chi_squared_distribution<double> dist(static_cast<double>(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

inline double normal_pdf(double x, double mean, double var) {
    return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2 * M_PI * var);
}

}

#endif
