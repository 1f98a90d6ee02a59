#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "bader/negbinom_sampler.hpp"
#include "bader/posterior.hpp"
#include "bader/simulation.hpp"
#include "sbc.hpp"
#include "support.hpp"

using namespace bader;

TEST(NbLogPmf, TinyDispersionIsPoisson) {
    for (double mean : {0.3, 7.0, 250.0}) {
        for (std::int64_t k = 0; k <= 400; k += (k < 20 ? 1 : 17)) {
            EXPECT_NEAR(nb_logpmf(k, mean, std::exp(-30.0)), poisson_logpmf(k, mean), 1e-8) << mean << " " << k;
        }
    }
}

TEST(NbLogPmf, NormalizedWithTheRightMean) {
    for (double scv : {0.01, 0.3, 2.0}) {
        const double mean = 10;
        double total = 0, first = 0;
        for (std::int64_t k = 0; k < 20000; ++k) {
            const double p = std::exp(nb_logpmf(k, mean, scv));
            total += p;
            first += static_cast<double>(k) * p;
        }
        EXPECT_NEAR(total, 1.0, 1e-10) << scv;
        EXPECT_NEAR(first, mean, 1e-8) << scv;
    }
}

// Reference log-pmf in 50 significant digits, so cancellation in lgamma(r + k) - lgamma(r) at large r is not an issue.
TEST(NbLogPmf, MatchesExtendedPrecision) {
    using big = boost::multiprecision::cpp_bin_float_50;
    for (double scv : {1e-6, 0.05, 0.7, 3.0}) {
        for (double mean : {0.5, 20.0, 900.0}) {
            const big r = 1 / big(scv), m = mean;
            for (std::int64_t k : {0, 1, 5, 19, 20, 21, 80, 1000}) {
                const big kb = k;
                const big want = boost::math::lgamma(r + kb) - boost::math::lgamma(r) - boost::math::lgamma(kb + 1)
                    + r * log(r / (r + m)) + kb * log(m / (r + m));
                const double w = want.convert_to<double>();
                EXPECT_NEAR(nb_logpmf(k, mean, scv), w, 1e-12 * std::max(1.0, std::abs(w))) << scv << " " << mean << " " << k;
            }
        }
    }
}

namespace {

SimulatedData small_flat(std::size_t m, std::size_t n, std::uint64_t seed, Model model = Model::negbinom) {
    FlatDesign d;
    d.m = m;
    d.n = n;
    d.seed = seed;
    d.model = model;
    return simulate_flat(d);
}

SamplerConfig nb_config() {
    SamplerConfig config;
    config.model = Model::negbinom;
    config.fix_tau = 0.8;
    return config;
}

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = testing_support::mean(x), my = testing_support::mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}

TEST(NegBinomScan, ZeroStepProposalsOnTheNullBranchChangeNothing) {
    auto data = small_flat(12, 3, 31);
    auto config = nb_config();
    config.alpha_proposal = {0, 1000000, 0, 0};
    config.mixed_proposal.branch0 = {0, 1000000, 0, 0};
    config.mixed_proposal.fixed_rate = 0.0;
    auto state = initial_state(data.counts, data.depths, config);
    const auto start = state;
    NegBinomProposals proposals(state.num_genes);
    seed_mixed_proposals(proposals, state, config.seed);
    for (std::uint64_t t = 1; t <= 25; ++t) {
        nb_gibbs_scan(state, data.counts, data.depths, config, proposals, t);
    }
    EXPECT_EQ(state.alpha, start.alpha);
    EXPECT_EQ(state.mu_a, start.mu_a);
    EXPECT_EQ(state.gamma, start.gamma);
    EXPECT_EQ(state.indicator, start.indicator);
}

TEST(NegBinomChain, DeterministicAcrossRunsAndThreads) {
    auto data = small_flat(30, 2, 32);
    auto config = nb_config();
    config.n_iter = 500;
    config.n_burnin = 100;
    config.thin = 4;
    auto one = run_negbinom_chain(data.counts, data.depths, config);
    config.threads = 3;
    auto threaded = run_negbinom_chain(data.counts, data.depths, config);
    EXPECT_EQ(one.mu_a, threaded.mu_a);
    EXPECT_EQ(one.gamma, threaded.gamma);
    EXPECT_EQ(one.indicator, threaded.indicator);
    EXPECT_EQ(one.alpha_a, threaded.alpha_a);
    EXPECT_EQ(one.psi0, threaded.psi0);
}

TEST(NegBinomChain, RefusesFreeTau) {
    auto data = small_flat(5, 2, 33);
    SamplerConfig config;
    config.model = Model::negbinom;
    try {
        run_negbinom_chain(data.counts, data.depths, config);
        FAIL() << "expected a refusal";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("fixed tau"), std::string::npos);
    }
    config.allow_free_tau = true;
    config.n_iter = 20;
    config.n_burnin = 10;
    config.thin = 1;
    EXPECT_NO_THROW(run_negbinom_chain(data.counts, data.depths, config));
}

// With alpha pinned near -30 the counts are Poisson given (I, mu_a, gamma), so the block posterior
// under a flat prior on mu_a reduces to a two-dimensional integral.
TEST(NegBinomChain, PoissonLimitMatchesQuadrature) {
    const std::vector<std::int64_t> ka{5, 7, 6}, kb{9, 11, 8};
    auto cm = CountMatrix({5, 7, 6, 9, 11, 8}, {"g1"}, {"a1", "a2", "a3", "b1", "b2", "b3"},
                          {Condition::A, Condition::A, Condition::A, Condition::B, Condition::B, Condition::B});
    SamplingDepths depths(std::vector<double>(6, 1.0));
    const double pi = 0.5, s2 = 0.25;

    auto loglik = [&](double mu, double gamma) {
        double out = 0;
        for (auto k : ka) {
            out += static_cast<double>(k) * mu - std::exp(mu);
        }
        for (auto k : kb) {
            out += static_cast<double>(k) * (mu + gamma) - std::exp(mu + gamma);
        }
        return out;
    };
    const double shift = loglik(std::log(6.0), std::log(28.0 / 18));
    auto f1 = [&](double mu, double g) { return std::exp(loglik(mu, g) - shift) * testing_support::normal_pdf(g, 0, s2); };
    auto f0 = [&](double mu) { return std::exp(loglik(mu, 0) - shift); };
    const double lo = std::log(6.0) - 3, hi = std::log(6.0) + 3;
    const double z1 = pi * testing_support::integrate2(f1, lo, hi, -4, 4);
    const double z0 = (1 - pi) * testing_support::integrate(f0, lo, hi);
    const double m1 = pi * testing_support::integrate2([&](double mu, double g) { return mu * f1(mu, g); }, lo, hi, -4, 4);
    const double m0 = (1 - pi) * testing_support::integrate([&](double mu) { return mu * f0(mu); }, lo, hi);
    const double want_p = z1 / (z0 + z1);
    const double want_mu = (m0 + m1) / (z0 + z1);

    SamplerConfig config;
    config.model = Model::negbinom;
    config.fixed.pi = pi;
    config.fixed.sigma_gamma_sq = s2;
    config.fixed.psi0 = -30;
    config.fix_tau = 1e-3;
    config.n_iter = 100000;
    config.n_burnin = 5000;
    config.thin = 1;
    auto draws = run_negbinom_chain(cm, depths, config);

    std::vector<double> ind(draws.indicator.begin(), draws.indicator.end());
    const double p = testing_support::mean(ind);
    const double mu = testing_support::mean(draws.mu_a);
    EXPECT_NEAR(p, want_p, 3 * testing_support::batch_means_se(ind));
    EXPECT_NEAR(mu, want_mu, 3 * testing_support::batch_means_se(draws.mu_a));
}

TEST(NegBinomChain, MediansAgreeWithTheLognormalSampler) {
    auto data = small_flat(200, 3, 34, Model::lognormal);
    SamplerConfig config;
    config.fix_tau = 0.8;
    config.n_iter = 15000;
    config.n_burnin = 5000;
    config.thin = 10;
    auto ln = run_lognormal_chain(data.counts, data.depths, config);
    config.model = Model::negbinom;
    auto nb = run_negbinom_chain(data.counts, data.depths, config);
    std::vector<double> ln_a, nb_a, ln_b, nb_b;
    for (std::size_t j = 0; j < 200; ++j) {
        ln_a.push_back(median(ln.trace(ln.mu_a, j)));
        nb_a.push_back(median(nb.trace(nb.mu_a, j)));
        ln_b.push_back(median(ln.mu_b_trace(j)));
        nb_b.push_back(median(nb.mu_b_trace(j)));
    }
    EXPECT_GT(correlation(ln_a, nb_a), 0.95);
    EXPECT_GT(correlation(ln_b, nb_b), 0.95);
}

// The joint (I, gamma, mu_a) move leaves strongly DE genes on the null branch for long stretches,
// so calibration needs long burn-in and heavy thinning.
TEST(NegBinomChain, SimulationBasedCalibration) {
    testing_support::SbcSettings s;
    s.model = Model::negbinom;
    s.m = 5;
    s.n = 3;
    s.replications = 200;
    s.burnin = 20000;
    s.draws = 49;
    s.thin = 200;
    s.psi0_sd = 2;
    const auto result = testing_support::run_sbc(s);
    EXPECT_GT(result.gamma_p, 1e-3);
    EXPECT_GT(result.psi0_p, 1e-3);
}
