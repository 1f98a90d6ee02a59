#ifndef BADER_NEGBINOM_SAMPLER_HPP
#define BADER_NEGBINOM_SAMPLER_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "adaptive_mh.hpp"
#include "counts.hpp"
#include "distributions.hpp"
#include "lognormal_sampler.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

/**
 * @file negbinom_sampler.hpp
 * @brief Metropolis-Hastings sampler for the negative-binomial data model under the same priors.
 *
 * k_ij ~ NegBinom(s_i e^{mu_j^T}, e^{alpha_j^T}), parameterized by mean and the squared coefficient of variation
 * of the gamma mixing distribution, i.e. variance M + M^2 e^alpha.
 * Nothing is available in closed form at the gene level, so alpha is updated by adaptive MH and
 * (I_j, gamma_j, mu_j^A) jointly through a `DiscreteMixedProposal`.
 */

namespace bader {

/**
 * Log likelihood of one count under the negative-binomial model with log mean `mu` (before depth scaling) and log dispersion `alpha`.
 */
inline double log_nb_likelihood(std::int64_t k, double s, double mu, double alpha) {
    return nb_logpmf(k, s * std::exp(mu), std::exp(alpha));
}

struct NegBinomProposals {
    std::vector<AdaptiveProposal<1>> alpha;
    std::vector<DiscreteMixedProposal> mixed;
    AcceptanceRecord acceptance;

    NegBinomProposals() = default;
    explicit NegBinomProposals(std::size_t num_genes) : alpha(2 * num_genes), mixed(num_genes) {
        acceptance.alpha.assign(alpha.size(), 0);
        acceptance.mixed.assign(mixed.size(), 0);
    }
};

namespace detail {

inline double nb_group_loglik(const CountMatrix& cm, const SamplingDepths& depths, std::size_t j, Condition c, double mu, double alpha) {
    const double mean_scale = std::exp(mu);
    const double scv = std::exp(alpha);
    double out = 0;
    for (auto i : cm.samples_in(c)) {
        out += nb_logpmf(cm(j, i), depths[i] * mean_scale, scv);
    }
    return out;
}

inline double nb_mixed_target(const CountMatrix& cm, const SamplingDepths& depths, const ChainState& state, std::size_t j, const MixedPoint& x) {
    const auto& h = state.hyper;
    double out = x.indicator ? std::log(h.pi) + normal_logpdf(x.effect, 0.0, h.sigma_gamma_sq) : std::log1p(-h.pi);
    out += nb_group_loglik(cm, depths, j, Condition::A, x.location, state.alpha_of(j, Condition::A));
    out += nb_group_loglik(cm, depths, j, Condition::B, x.location + x.effect, state.alpha_of(j, Condition::B));
    return out;
}

inline void negbinom_gene_update(ChainState& state, const CountMatrix& cm, const SamplingDepths& depths, const SamplerConfig& config,
                                 NegBinomProposals& proposals, std::size_t j, Stream& rng) {
    const auto& h = state.hyper;

    for (auto c : {Condition::A, Condition::B}) {
        const double mu = state.mean_of(j, c);
        auto target = [&](double a) { return nb_group_loglik(cm, depths, j, c, mu, a) + normal_logpdf(a, h.psi0, h.tau_sq); };
        const auto block = 2 * j + static_cast<std::size_t>(c);
        auto& prop = proposals.alpha[block];
        double& alpha = state.alpha[block];
        const double proposed = prop.propose({alpha}, config.alpha_proposal, rng)[0];
        if (accept(target(alpha), target(proposed), rng)) {
            alpha = proposed;
            ++proposals.acceptance.alpha[block];
        }
        prop.record({alpha});
    }

    auto& mixed = proposals.mixed[j];
    const MixedPoint current{state.indicator[j] != 0, state.gamma[j], state.mu_a[j]};
    const MixedPoint proposed = mixed.propose(current, config.mixed_proposal, rng);
    const double log_current = nb_mixed_target(cm, depths, state, j, current);
    const double log_proposed = nb_mixed_target(cm, depths, state, j, proposed)
        + mixed.log_proposal_ratio(current, proposed, config.mixed_proposal);
    MixedPoint next = current;
    if (accept(log_current, log_proposed, rng)) {
        next = proposed;
        ++proposals.acceptance.mixed[j];
    }
    state.indicator[j] = next.indicator;
    state.gamma[j] = next.indicator ? next.effect : 0.0;
    state.mu_a[j] = next.location;
    mixed.record(next);
}

}

/**
 * Seed both branches of every gene's mixed proposal from the starting state: branch 0 at the initial mu_a,
 * branch 1 at (small jitter, initial mu_a).
 */
inline void seed_mixed_proposals(NegBinomProposals& proposals, const ChainState& state, std::uint64_t seed) {
    for (std::size_t j = 0; j < state.num_genes; ++j) {
        Stream rng(seed, j, 0);
        proposals.mixed[j].seed(state.mu_a[j], 0.01 * rng.normal(), state.mu_a[j]);
    }
}

/**
 * @brief One sweep of the negative-binomial sampler: alpha, the joint (I, gamma, mu_a) move, then the hyperparameters.
 */
inline void nb_gibbs_scan(ChainState& state, const CountMatrix& cm, const SamplingDepths& depths, const SamplerConfig& config,
                          NegBinomProposals& proposals, std::uint64_t iteration) {
    parallel_for(state.num_genes, config.threads, [] { return 0; }, [&](int, std::size_t j) {
        Stream rng(config.seed, j, iteration);
        detail::negbinom_gene_update(state, cm, depths, config, proposals, j, rng);
    });

    Stream rng(config.seed, hyper_block, iteration);
    update_hyperparameters(state, config, rng);
    ++proposals.acceptance.steps;
}

inline PosteriorDraws run_negbinom_chain(const CountMatrix& cm, const SamplingDepths& depths, const SamplerConfig& config,
                                         const ProgressCallback& progress = {}) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    auto state = initial_state(cm, depths, config);
    NegBinomProposals proposals(state.num_genes);
    seed_mixed_proposals(proposals, state, config.seed);

    PosteriorDraws draws(cm.gene_ids(), Model::negbinom);
    for (std::size_t t = 1; t <= config.n_iter; ++t) {
        nb_gibbs_scan(state, cm, depths, config, proposals, t);
        if (t > config.n_burnin && (t - config.n_burnin) % config.thin == 0) {
            draws.append(state);
        }
        if (progress) {
            progress(t);
        }
    }
    draws.acceptance = std::move(proposals.acceptance);
    draws.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return draws;
}

/**
 * Run the chain of the configured model.
 */
inline PosteriorDraws run_chain(const CountMatrix& cm, const SamplingDepths& depths, const SamplerConfig& config,
                                const ProgressCallback& progress = {}) {
    return config.model == Model::lognormal ? run_lognormal_chain(cm, depths, config, progress) : run_negbinom_chain(cm, depths, config, progress);
}

}

#endif
