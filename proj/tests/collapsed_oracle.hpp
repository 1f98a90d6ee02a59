#ifndef BADER_TESTS_COLLAPSED_ORACLE_HPP
#define BADER_TESTS_COLLAPSED_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "bader/rng.hpp"
#include "support.hpp"

namespace testing_support {

/// One gene's latent log rates and the parameters the (I, mu_a, gamma) block is conditioned on.
struct CollapsedInstance {
    std::vector<double> lambda_a, lambda_b;
    double alpha_a = 0, alpha_b = 0;
    double sigma_gamma_sq = 1;
    double pi = 0.5;
};

inline CollapsedInstance random_instance(bader::Stream& rng, std::size_t n_a, std::size_t n_b) {
    CollapsedInstance inst;
    const double mu = rng.normal(3, 1.5);
    const double shift = rng.bernoulli(0.5) ? rng.normal(0, 1) : 0.0;
    inst.alpha_a = rng.normal(-2, 1);
    inst.alpha_b = rng.normal(-2, 1);
    for (std::size_t i = 0; i < n_a; ++i) {
        inst.lambda_a.push_back(rng.normal(mu, std::exp(inst.alpha_a / 2)));
    }
    for (std::size_t i = 0; i < n_b; ++i) {
        inst.lambda_b.push_back(rng.normal(mu + shift, std::exp(inst.alpha_b / 2)));
    }
    inst.sigma_gamma_sq = std::exp(rng.normal(-1, 1));
    inst.pi = 0.05 + 0.9 * rng.uniform();
    return inst;
}

/**
 * @brief Conditionals of (I, mu_a, gamma) obtained by numerically integrating the uncollapsed joint
 *
 *   prod_A N(lambda | mu, e^alpha_a) prod_B N(lambda | mu + gamma, e^alpha_b) x [pi N(gamma | 0, s2) if I = 1, (1 - pi) delta_0(gamma) if I = 0]
 *
 * under a flat prior on mu. Nothing here uses the closed forms being tested.
 */
class CollapsedOracle {
public:
    explicit CollapsedOracle(CollapsedInstance inst) : my(std::move(inst)) {
        const double va = std::exp(my.alpha_a), vb = std::exp(my.alpha_b);
        double sa = 0, sb = 0;
        for (double l : my.lambda_a) {
            sa += l;
        }
        for (double l : my.lambda_b) {
            sb += l;
        }
        const double na = static_cast<double>(my.lambda_a.size()), nb = static_cast<double>(my.lambda_b.size());
        const double bar_a = sa / na, bar_b = sb / nb;
        my_scale_b = std::sqrt(vb / nb);
        const double spread = std::sqrt(std::max(va / na, vb / nb) + my.sigma_gamma_sq);
        my_mu_lo = std::min(bar_a, bar_b) - 15 * spread;
        my_mu_hi = std::max(bar_a, bar_b) + 15 * spread;

        // Maximizers of the likelihood part, used as log-scale offsets.
        my_shift1 = log_lik(bar_a, bar_b - bar_a);
        const double pooled = (sa / va + sb / vb) / (na / va + nb / vb);
        my_shift0 = log_lik(pooled, 0);

        my_z1 = integrate([&](double mu) { return slab_marginal(mu); }, my_mu_lo, my_mu_hi);
        my_z0 = integrate([&](double mu) { return spike(mu); }, my_mu_lo, my_mu_hi);
    }

    double prob_indicator() const {
        const double log1 = std::log(my.pi) + my_shift1 + std::log(my_z1);
        const double log0 = std::log1p(-my.pi) + my_shift0 + std::log(my_z0);
        return 1 / (1 + std::exp(log0 - log1));
    }

    /// Density of mu_a given the indicator, with gamma integrated out.
    double mu_density(double mu, bool indicator) const { return indicator ? slab_marginal(mu) / my_z1 : spike(mu) / my_z0; }

    /// Density of gamma given I = 1 and mu_a.
    double gamma_density(double gamma, double mu) const { return slab_joint(mu, gamma) / slab_marginal(mu); }

    /// Moments under the exact conditional of the whole block.
    double mean_mu() const {
        const double p = prob_indicator();
        const double m1 = integrate([&](double mu) { return mu * slab_marginal(mu); }, my_mu_lo, my_mu_hi) / my_z1;
        const double m0 = integrate([&](double mu) { return mu * spike(mu); }, my_mu_lo, my_mu_hi) / my_z0;
        return p * m1 + (1 - p) * m0;
    }

    double mean_gamma() const {
        const double m1 = integrate([&](double mu) {
            auto [lo, hi] = gamma_range(mu);
            return integrate([&](double g) { return g * slab_joint(mu, g); }, lo, hi);
        }, my_mu_lo, my_mu_hi) / my_z1;
        return prob_indicator() * m1;
    }

    double mean_gamma_sq() const {
        const double m1 = integrate([&](double mu) {
            auto [lo, hi] = gamma_range(mu);
            return integrate([&](double g) { return g * g * slab_joint(mu, g); }, lo, hi);
        }, my_mu_lo, my_mu_hi) / my_z1;
        return prob_indicator() * m1;
    }

    const CollapsedInstance& instance() const { return my; }

private:
    double log_lik(double mu, double gamma) const {
        double out = 0;
        const double va = std::exp(my.alpha_a), vb = std::exp(my.alpha_b);
        for (double l : my.lambda_a) {
            out += -0.5 * std::log(2 * M_PI * va) - 0.5 * (l - mu) * (l - mu) / va;
        }
        for (double l : my.lambda_b) {
            out += -0.5 * std::log(2 * M_PI * vb) - 0.5 * (l - mu - gamma) * (l - mu - gamma) / vb;
        }
        return out;
    }

    std::pair<double, double> gamma_range(double mu) const {
        double sb = 0;
        for (double l : my.lambda_b) {
            sb += l;
        }
        const double d = sb / static_cast<double>(my.lambda_b.size()) - mu;
        const double s = std::min(my_scale_b, std::sqrt(my.sigma_gamma_sq));
        return {std::min(0.0, d) - 15 * std::max(s, 1e-3), std::max(0.0, d) + 15 * std::max(s, 1e-3)};
    }

    double slab_joint(double mu, double gamma) const {
        return std::exp(log_lik(mu, gamma) - my_shift1) * normal_pdf(gamma, 0, my.sigma_gamma_sq);
    }

    double slab_marginal(double mu) const {
        auto [lo, hi] = gamma_range(mu);
        return integrate([&](double g) { return slab_joint(mu, g); }, lo, hi);
    }

    double spike(double mu) const { return std::exp(log_lik(mu, 0) - my_shift0); }

    CollapsedInstance my;
    double my_scale_b = 1;
    double my_mu_lo = 0, my_mu_hi = 0;
    double my_shift0 = 0, my_shift1 = 0;
    double my_z0 = 1, my_z1 = 1;
};

}

#endif
