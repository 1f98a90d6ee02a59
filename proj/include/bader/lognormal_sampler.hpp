#ifndef BADER_LOGNORMAL_SAMPLER_HPP
#define BADER_LOGNORMAL_SAMPLER_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "adaptive_mh.hpp"
#include "counts.hpp"
#include "distributions.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

/**
 * @file lognormal_sampler.hpp
 * @brief Gibbs sampler for the Poisson-lognormal model with a spike-and-slab log fold change.
 *
 * Data model: k_ij ~ Poisson(s_i exp(lambda_ij)), lambda_ij ~ N(mu_j^T, exp(alpha_j^T)), with mu_j^B = mu_j^A + gamma_j.
 * Each scan updates lambda and alpha by adaptive Metropolis-Hastings, then draws (I_j, mu_j^A, gamma_j)
 * exactly from their joint conditional by collapsing, and finally the hyperparameters in closed form.
 */

namespace bader {

struct NormalParams {
    double mean = 0;
    double var = 1;

    double logpdf(double x) const { return normal_logpdf(x, mean, var); }
};

/**
 * @brief Factorization of the product of two normal densities in x.
 *
 * N(x | mu1, var1) N(x | mu2, var2) = N(mu1 | mu2, var1 + var2) N(x | (mu1 var2 + mu2 var1) / (var1 + var2), var1 var2 / (var1 + var2)).
 */
struct NormalProduct {
    /// Density over mu1 with mean mu2 and variance var1 + var2; free of x.
    NormalParams marginal;
    NormalParams conditional;
};

inline NormalProduct product_of_normals(double mu1, double var1, double mu2, double var2) {
    const double total = var1 + var2;
    NormalProduct out;
    out.marginal = {mu2, total};
    out.conditional = {(mu1 * var2 + mu2 * var1) / total, var1 * var2 / total};
    return out;
}

/**
 * Log full conditional of one latent log rate, up to a constant: log Poisson(k | s e^lambda) + log N(lambda | mean, e^alpha).
 */
inline double log_fcd_lambda(std::int64_t k, double s, double lambda, double mean, double alpha) {
    const double d = lambda - mean;
    return static_cast<double>(k) * lambda - s * std::exp(lambda) - 0.5 * d * d * std::exp(-alpha);
}

/**
 * Log full conditional of one dispersion, up to a constant: sum_i log N(lambda_i | mean, e^alpha) + log N(alpha | psi0, tau^2).
 */
inline double log_fcd_alpha(std::span<const double> lambdas, double mean, double alpha, double psi0, double tau_sq) {
    double ss = 0;
    for (auto l : lambdas) {
        ss += (l - mean) * (l - mean);
    }
    const double n = static_cast<double>(lambdas.size());
    const double d = alpha - psi0;
    return -0.5 * (n * alpha + ss * std::exp(-alpha) + d * d / tau_sq);
}

/**
 * @brief Quantities the collapsed update of (I_j, mu_j^A, gamma_j) depends on.
 *
 * `v0 = e^{alpha^B}` and `v1 = e^{alpha^B} + n_B sigma_gamma^2`.
 * With unequal group sizes the group means have variances e^{alpha^A}/n_A and v_l/n_B.
 */
struct CollapsedAux {
    double lambda_bar_a = 0;
    double lambda_bar_b = 0;
    double exp_alpha_a = 1;
    double v0 = 1;
    double v1 = 1;
    double n_a = 1;
    double n_b = 1;
    double sigma_gamma_sq = 1;

    double v(bool indicator) const { return indicator ? v1 : v0; }

    /// Variance of the group-A mean about mu_a.
    double var_a() const { return exp_alpha_a / n_a; }

    /// Variance of the group-B mean about mu_a once gamma is integrated out.
    double var_b(bool indicator) const { return v(indicator) / n_b; }
};

inline CollapsedAux collapsed_aux(std::span<const double> lambda_a, std::span<const double> lambda_b, double alpha_a, double alpha_b, double sigma_gamma_sq) {
    CollapsedAux aux;
    double sa = 0, sb = 0;
    for (auto l : lambda_a) {
        sa += l;
    }
    for (auto l : lambda_b) {
        sb += l;
    }
    aux.n_a = static_cast<double>(lambda_a.size());
    aux.n_b = static_cast<double>(lambda_b.size());
    aux.lambda_bar_a = sa / aux.n_a;
    aux.lambda_bar_b = sb / aux.n_b;
    aux.exp_alpha_a = std::exp(alpha_a);
    aux.v0 = std::exp(alpha_b);
    aux.v1 = aux.v0 + aux.n_b * sigma_gamma_sq;
    aux.sigma_gamma_sq = sigma_gamma_sq;
    return aux;
}

/**
 * P(I_j = 1 | everything except mu_j^A, gamma_j, I_j) = pi N1 / (pi N1 + (1 - pi) N0),
 * with N_l = N(lambda_bar_a | lambda_bar_b, e^{alpha^A}/n_A + v_l/n_B).
 */
inline double indicator_probability(const CollapsedAux& aux, double pi) {
    const double log_n1 = normal_logpdf(aux.lambda_bar_a, aux.lambda_bar_b, aux.var_a() + aux.var_b(true));
    const double log_n0 = normal_logpdf(aux.lambda_bar_a, aux.lambda_bar_b, aux.var_a() + aux.var_b(false));
    const double log_odds = std::log(pi) + log_n1 - std::log1p(-pi) - log_n0;
    return 1.0 / (1.0 + std::exp(-log_odds));
}

/// Conditional of mu_j^A given I_j, with gamma_j integrated out.
inline NormalParams mu_conditional(const CollapsedAux& aux, bool indicator) {
    return product_of_normals(aux.lambda_bar_a, aux.var_a(), aux.lambda_bar_b, aux.var_b(indicator)).conditional;
}

/**
 * Conditional of gamma_j given I_j = 1 and mu_j^A: N(sigma^2 sum_i (lambda_ij^B - mu) / v1, sigma^2 e^{alpha^B} / v1).
 */
inline NormalParams gamma_conditional(const CollapsedAux& aux, double mu_a) {
    const double sum_dev = aux.n_b * (aux.lambda_bar_b - mu_a);
    return {aux.sigma_gamma_sq * sum_dev / aux.v1, aux.sigma_gamma_sq * aux.v0 / aux.v1};
}

inline bool update_indicator_collapsed(const CollapsedAux& aux, double pi, Stream& rng) {
    return rng.bernoulli(indicator_probability(aux, pi));
}

inline double update_mu_collapsed(const CollapsedAux& aux, bool indicator, Stream& rng) {
    const auto p = mu_conditional(aux, indicator);
    return rng.normal(p.mean, std::sqrt(p.var));
}

inline double update_gamma(const CollapsedAux& aux, bool indicator, double mu_a, Stream& rng) {
    if (!indicator) {
        return 0;
    }
    const auto p = gamma_conditional(aux, mu_a);
    return rng.normal(p.mean, std::sqrt(p.var));
}

/**
 * Adaptive proposal state of the lognormal sampler: one block per (gene, sample) for lambda and one per (gene, condition) for alpha.
 */
struct LognormalProposals {
    std::vector<AdaptiveProposal<1>> lambda;
    std::vector<AdaptiveProposal<1>> alpha;
    AcceptanceRecord acceptance;

    LognormalProposals() = default;
    LognormalProposals(std::size_t num_genes, std::size_t num_samples) :
        lambda(num_genes * num_samples), alpha(2 * num_genes)
    {
        acceptance.lambda.assign(lambda.size(), 0);
        acceptance.alpha.assign(alpha.size(), 0);
    }
};

/// Block id of the hyperparameter stream; gene streams use the gene index.
inline constexpr std::uint64_t hyper_block = ~std::uint64_t{0};

namespace detail {

inline void lognormal_gene_update(ChainState& state, const CountMatrix& cm, const SamplingDepths& depths, const SamplerConfig& config,
                                  LognormalProposals& proposals, std::size_t j, Stream& rng, std::vector<double>& scratch_a, std::vector<double>& scratch_b) {
    const auto n = state.num_samples;
    const auto& h = state.hyper;
    double* lam = state.lambda.data() + j * n;

    for (auto c : {Condition::A, Condition::B}) {
        const double mean = state.mean_of(j, c);
        const double precision = std::exp(-state.alpha_of(j, c));
        for (auto i : cm.samples_in(c)) {
            const auto block = j * n + i;
            auto& prop = proposals.lambda[block];
            const double current = lam[i];
            const double proposed = prop.propose({current}, config.lambda_proposal, rng)[0];
            const auto k = static_cast<double>(cm(j, i));
            const double dc = current - mean, dp = proposed - mean;
            const double log_ratio = k * (proposed - current) - depths[i] * (std::exp(proposed) - std::exp(current))
                - 0.5 * precision * (dp * dp - dc * dc);
            if (accept(0.0, log_ratio, rng)) {
                lam[i] = proposed;
                ++proposals.acceptance.lambda[block];
            }
            prop.record({lam[i]});
        }
    }

    for (auto c : {Condition::A, Condition::B}) {
        const double mean = state.mean_of(j, c);
        double ss = 0;
        const auto& samples = cm.samples_in(c);
        for (auto i : samples) {
            ss += (lam[i] - mean) * (lam[i] - mean);
        }
        const double nc = static_cast<double>(samples.size());
        auto target = [&](double a) {
            const double d = a - h.psi0;
            return -0.5 * (nc * a + ss * std::exp(-a) + d * d / h.tau_sq);
        };
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

    scratch_a.clear();
    scratch_b.clear();
    for (auto i : cm.samples_in(Condition::A)) {
        scratch_a.push_back(lam[i]);
    }
    for (auto i : cm.samples_in(Condition::B)) {
        scratch_b.push_back(lam[i]);
    }
    const auto aux = collapsed_aux(scratch_a, scratch_b, state.alpha_of(j, Condition::A), state.alpha_of(j, Condition::B), h.sigma_gamma_sq);
    const bool ind = update_indicator_collapsed(aux, h.pi, rng);
    const double mu = update_mu_collapsed(aux, ind, rng);
    state.indicator[j] = ind;
    state.mu_a[j] = mu;
    state.gamma[j] = update_gamma(aux, ind, mu, rng);
}

}

/**
 * @brief One full sweep: lambda, alpha, the collapsed (I, mu_a, gamma) triple, then the hyperparameters.
 *
 * Gene-level updates are conditionally independent given the hyperparameters, so each gene runs its
 * lambda -> alpha -> collapsed sequence on its own stream keyed by (seed, gene, iteration).
 * `iteration` must be distinct for each scan of a chain.
 */
inline void gibbs_scan(ChainState& state, const CountMatrix& cm, const SamplingDepths& depths, const SamplerConfig& config,
                       LognormalProposals& proposals, std::uint64_t iteration) {
    struct Scratch {
        std::vector<double> a, b;
    };
    parallel_for(state.num_genes, config.threads, [] { return Scratch{}; }, [&](Scratch& scratch, std::size_t j) {
        Stream rng(config.seed, j, iteration);
        detail::lognormal_gene_update(state, cm, depths, config, proposals, j, rng, scratch.a, scratch.b);
    });

    Stream rng(config.seed, hyper_block, iteration);
    update_hyperparameters(state, config, rng);
    ++proposals.acceptance.steps;
}

/// Called after every iteration with the 1-based iteration number.
using ProgressCallback = std::function<void(std::size_t)>;

/**
 * Run a full chain and keep every `thin`-th post-burn-in state.
 * Deterministic given the data, the configuration and the seed, independent of the thread count.
 */
inline PosteriorDraws run_lognormal_chain(const CountMatrix& cm, const SamplingDepths& depths, const SamplerConfig& config,
                                          const ProgressCallback& progress = {}) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    auto state = initial_state(cm, depths, config);
    LognormalProposals proposals(state.num_genes, state.num_samples);

    PosteriorDraws draws(cm.gene_ids(), Model::lognormal);
    for (std::size_t t = 1; t <= config.n_iter; ++t) {
        gibbs_scan(state, cm, depths, config, proposals, t);
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

}

#endif
