#ifndef BADER_TESTS_SBC_HPP
#define BADER_TESTS_SBC_HPP

#include <cmath>
#include <vector>

#include "bader/negbinom_sampler.hpp"
#include "bader/simulation.hpp"
#include "support.hpp"

namespace testing_support {

/**
 * Simulation-based calibration on the flat design. pi, sigma_gamma^2 and tau are held at their simulation values;
 * psi0 is drawn from N(psi0_loc, psi0_sd^2) for each replicate and left free in the sampler (whose prior on it is flat).
 */
struct SbcSettings {
    bader::Model model = bader::Model::lognormal;
    std::size_t m = 50;
    std::size_t n = 5;
    std::size_t replications = 500;
    std::size_t burnin = 2000;
    /// Number of retained draws L; ranks take values in {0, ..., L}.
    std::size_t draws = 99;
    std::size_t thin = 10;
    double pi = 0.5;
    double sigma_gamma = 0.8;
    double tau = 0.8;
    double psi0_loc = -3;
    double psi0_sd = 1;
    std::size_t bins = 10;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct SbcResult {
    std::vector<std::size_t> gamma_hist, psi0_hist;
    double gamma_p = 0, psi0_p = 0;
};

/// Rank of `truth` among `draws`, with ties broken uniformly at random.
inline std::size_t randomized_rank(const std::vector<double>& draws, double truth, bader::Stream& rng) {
    std::size_t below = 0, ties = 0;
    for (double d : draws) {
        below += d < truth;
        ties += d == truth;
    }
    return below + static_cast<std::size_t>(rng.below(ties + 1));
}

inline SbcResult run_sbc(const SbcSettings& s) {
    SbcResult out;
    out.gamma_hist.assign(s.bins, 0);
    out.psi0_hist.assign(s.bins, 0);
    const std::size_t ranks = s.draws + 1;
    auto bin_of = [&](std::size_t rank) { return rank * s.bins / ranks; };

    for (std::size_t r = 0; r < s.replications; ++r) {
        bader::Stream rng(s.seed, 1000000 + r, 0);
        bader::FlatDesign design;
        design.m = s.m;
        design.n = s.n;
        design.pi0 = s.pi;
        design.sigma_gamma = s.sigma_gamma;
        design.tau = s.tau;
        design.psi0 = rng.normal(s.psi0_loc, s.psi0_sd);
        design.model = s.model;
        design.seed = s.seed * 7919 + r;
        const auto data = bader::simulate_flat(design);

        bader::SamplerConfig config;
        config.model = s.model;
        config.fixed.pi = s.pi;
        config.fixed.sigma_gamma_sq = s.sigma_gamma * s.sigma_gamma;
        config.fix_tau = s.tau;
        config.n_burnin = s.burnin;
        config.thin = s.thin;
        config.n_iter = s.burnin + s.draws * s.thin;
        config.seed = s.seed + 31 * r;
        config.threads = s.threads;
        const auto fit = bader::run_chain(data.counts, data.depths, config);

        for (std::size_t j = 0; j < s.m; ++j) {
            ++out.gamma_hist[bin_of(randomized_rank(fit.trace(fit.gamma, j), data.truth.gamma[j], rng))];
        }
        ++out.psi0_hist[bin_of(randomized_rank(fit.psi0, design.psi0, rng))];
    }
    out.gamma_p = chi_square_uniform_pvalue(out.gamma_hist);
    out.psi0_p = chi_square_uniform_pvalue(out.psi0_hist);
    return out;
}

}

#endif
