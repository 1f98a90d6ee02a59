#ifndef BADER_MODEL_HPP
#define BADER_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "adaptive_mh.hpp"
#include "counts.hpp"
#include "distributions.hpp"
#include "rng.hpp"

/**
 * @file model.hpp
 * @brief Chain state, sampler configuration and saved draws shared by both samplers.
 */

namespace bader {

enum class Model { lognormal, negbinom };

inline std::string to_string(Model m) { return m == Model::lognormal ? "lognormal" : "negbinom"; }

inline Model parse_model(const std::string& s) {
    if (s == "lognormal") {
        return Model::lognormal;
    }
    if (s == "negbinom") {
        return Model::negbinom;
    }
    throw std::invalid_argument("unknown model '" + s + "' (expected lognormal or negbinom)");
}

struct Hyperparameters {
    double pi = 0.1;
    double sigma_gamma_sq = 0.5;
    double psi0 = -3;
    double tau_sq = 1;
};

/**
 * Hyperparameters held at fixed values instead of being updated.
 * Only `tau` is a user-facing option; the rest exist for calibration studies.
 */
struct FixedHyperparameters {
    std::optional<double> pi;
    std::optional<double> sigma_gamma_sq;
    std::optional<double> psi0;
};

/// Floor applied to the variance hyperparameters after each draw.
inline constexpr double variance_floor = 1e-10;

struct SamplerConfig {
    std::size_t n_iter = 20000;
    std::size_t n_burnin = 10000;
    std::size_t thin = 10;
    std::uint64_t seed = 1;

    /// When set, tau (the standard deviation of the dispersion prior) is held at this value.
    std::optional<double> fix_tau;
    Model model = Model::lognormal;

    /// The negative-binomial sampler refuses a free tau unless this is set.
    bool allow_free_tau = false;

    int threads = 1;

    FixedHyperparameters fixed;
    Hyperparameters initial;

    ProposalSettings lambda_proposal{0.1, 100, 1e-6, 0};
    ProposalSettings alpha_proposal{0.3, 100, 1e-6, 0};
    DiscreteMixedProposal::Settings mixed_proposal;

    std::size_t num_snapshots() const { return (n_iter - n_burnin) / thin; }

    void validate() const {
        if (n_burnin >= n_iter) {
            throw std::invalid_argument("burn-in (" + std::to_string(n_burnin) + ") must be smaller than the number of iterations (" + std::to_string(n_iter) + ")");
        }
        if (thin < 1) {
            throw std::invalid_argument("thinning interval must be at least 1");
        }
        if (fix_tau && !(*fix_tau > 0)) {
            throw std::invalid_argument("fixed tau must be positive");
        }
        if (threads < 1) {
            throw std::invalid_argument("thread count must be at least 1");
        }
        if (model == Model::negbinom && !fix_tau && !allow_free_tau) {
            throw std::invalid_argument(
                "the negative-binomial sampler needs a fixed tau: with a free tau the dispersion prior variance "
                "drifts to infinity and the chain diverges (pass --fix-tau, or --allow-free-tau to override)");
        }
    }
};

/**
 * @brief All unknowns of one chain.
 *
 * `lambda` is gene-major over samples (empty for the negative-binomial model) and `alpha` holds the
 * condition-A and condition-B dispersions of each gene at `2 * j` and `2 * j + 1`.
 * The group-B log mean is `mu_a[j] + gamma[j]`, and `gamma[j] == 0` exactly when `indicator[j] == 0`.
 */
struct ChainState {
    std::size_t num_genes = 0;
    std::size_t num_samples = 0;
    std::vector<double> lambda;
    std::vector<double> mu_a;
    std::vector<double> gamma;
    std::vector<std::uint8_t> indicator;
    std::vector<double> alpha;
    Hyperparameters hyper;

    double& alpha_of(std::size_t gene, Condition c) { return alpha[2 * gene + static_cast<std::size_t>(c)]; }
    double alpha_of(std::size_t gene, Condition c) const { return alpha[2 * gene + static_cast<std::size_t>(c)]; }

    double mean_of(std::size_t gene, Condition c) const { return mu_a[gene] + (c == Condition::B ? gamma[gene] : 0.0); }

    bool operator==(const ChainState& other) const {
        return num_genes == other.num_genes && num_samples == other.num_samples && lambda == other.lambda && mu_a == other.mu_a
            && gamma == other.gamma && indicator == other.indicator && alpha == other.alpha && hyper.pi == other.hyper.pi
            && hyper.sigma_gamma_sq == other.hyper.sigma_gamma_sq && hyper.psi0 == other.hyper.psi0 && hyper.tau_sq == other.hyper.tau_sq;
    }
};

/**
 * Starting state: lambda = log((k + 0.5) / s), mu_a = mean of group-A lambda, no DE, and every alpha at the initial psi0.
 */
inline ChainState initial_state(const CountMatrix& cm, const SamplingDepths& depths, const SamplerConfig& config) {
    if (depths.size() != cm.num_samples()) {
        throw std::invalid_argument("got " + std::to_string(depths.size()) + " sampling depths for " + std::to_string(cm.num_samples()) + " samples");
    }
    ChainState state;
    const auto m = cm.num_genes();
    const auto n = cm.num_samples();
    state.num_genes = m;
    state.num_samples = n;
    state.hyper = config.initial;
    if (config.fixed.pi) {
        state.hyper.pi = *config.fixed.pi;
    }
    if (config.fixed.sigma_gamma_sq) {
        state.hyper.sigma_gamma_sq = *config.fixed.sigma_gamma_sq;
    }
    if (config.fixed.psi0) {
        state.hyper.psi0 = *config.fixed.psi0;
    }
    if (config.fix_tau) {
        state.hyper.tau_sq = *config.fix_tau * *config.fix_tau;
    }

    std::vector<double> lambda(m * n);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            lambda[j * n + i] = std::log((static_cast<double>(cm(j, i)) + 0.5) / depths[i]);
        }
    }
    const auto& in_a = cm.samples_in(Condition::A);
    state.mu_a.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        double sum = 0;
        for (auto i : in_a) {
            sum += lambda[j * n + i];
        }
        state.mu_a[j] = sum / static_cast<double>(in_a.size());
    }
    if (config.model == Model::lognormal) {
        state.lambda = std::move(lambda);
    }
    state.gamma.assign(m, 0.0);
    state.indicator.assign(m, 0);
    state.alpha.assign(2 * m, state.hyper.psi0);
    return state;
}

/**
 * @brief Closed-form hyperparameter updates given the gene-level unknowns.
 *
 * pi ~ Beta(1 + sum I, 1 + sum (1 - I)); sigma_gamma^2 ~ InvGamma(sum I / 2, sum gamma^2 I / 2);
 * psi0 ~ N(mean alpha, tau^2 / 2m); tau^2 ~ InvGamma(m, sum (alpha - psi0)^2 / 2).
 * When no gene is DE the sigma_gamma^2 conditional is improper and the previous value is kept.
 * Reductions run in gene order so results do not depend on threading.
 */
inline void update_hyperparameters(ChainState& state, const SamplerConfig& config, Stream& rng) {
    const auto m = state.num_genes;
    std::size_t n_de = 0;
    double sum_sq_gamma = 0;
    for (std::size_t j = 0; j < m; ++j) {
        if (state.indicator[j]) {
            ++n_de;
            sum_sq_gamma += state.gamma[j] * state.gamma[j];
        }
    }

    auto& h = state.hyper;
    if (config.fixed.pi) {
        h.pi = *config.fixed.pi;
    } else {
        h.pi = draw_beta(rng, 1.0 + static_cast<double>(n_de), 1.0 + static_cast<double>(m - n_de));
    }

    if (config.fixed.sigma_gamma_sq) {
        h.sigma_gamma_sq = *config.fixed.sigma_gamma_sq;
    } else if (n_de > 0) {
        h.sigma_gamma_sq = std::max(variance_floor, draw_inverse_gamma(rng, static_cast<double>(n_de) / 2, sum_sq_gamma / 2));
    }

    const double two_m = 2.0 * static_cast<double>(m);
    if (config.fixed.psi0) {
        h.psi0 = *config.fixed.psi0;
    } else {
        double sum_alpha = 0;
        for (auto a : state.alpha) {
            sum_alpha += a;
        }
        h.psi0 = rng.normal(sum_alpha / two_m, std::sqrt(h.tau_sq / two_m));
    }

    if (config.fix_tau) {
        h.tau_sq = *config.fix_tau * *config.fix_tau;
    } else {
        double ss = 0;
        for (auto a : state.alpha) {
            ss += (a - h.psi0) * (a - h.psi0);
        }
        h.tau_sq = std::max(variance_floor, draw_inverse_gamma(rng, static_cast<double>(m), ss / 2));
    }
}

/**
 * Per-block Metropolis-Hastings acceptance counts.
 */
struct AcceptanceRecord {
    std::size_t steps = 0;
    std::vector<std::uint32_t> lambda;
    std::vector<std::uint32_t> alpha;
    std::vector<std::uint32_t> mixed;

    struct Summary {
        double mean = 0, min = 0, max = 0;
        bool empty = true;
    };

    Summary summarize(const std::vector<std::uint32_t>& accepts) const {
        Summary out;
        if (accepts.empty() || steps == 0) {
            return out;
        }
        out.empty = false;
        out.min = 1;
        double total = 0;
        for (auto a : accepts) {
            const double r = static_cast<double>(a) / static_cast<double>(steps);
            total += r;
            out.min = std::min(out.min, r);
            out.max = std::max(out.max, r);
        }
        out.mean = total / static_cast<double>(accepts.size());
        return out;
    }
};

/**
 * @brief Thinned posterior draws.
 *
 * Gene-level traces are stored draw-major: the value for gene `j` in draw `d` lives at `d * num_genes() + j`.
 * The latent log rates are not kept, as they would dominate memory.
 */
class PosteriorDraws {
public:
    PosteriorDraws() = default;
    PosteriorDraws(std::vector<std::string> gene_ids, Model model) : my_genes(std::move(gene_ids)), my_model(model) {}

    void append(const ChainState& state) {
        pi.push_back(state.hyper.pi);
        sigma_gamma_sq.push_back(state.hyper.sigma_gamma_sq);
        psi0.push_back(state.hyper.psi0);
        tau_sq.push_back(state.hyper.tau_sq);
        indicator.insert(indicator.end(), state.indicator.begin(), state.indicator.end());
        gamma.insert(gamma.end(), state.gamma.begin(), state.gamma.end());
        mu_a.insert(mu_a.end(), state.mu_a.begin(), state.mu_a.end());
        for (std::size_t j = 0; j < state.num_genes; ++j) {
            alpha_a.push_back(state.alpha[2 * j]);
            alpha_b.push_back(state.alpha[2 * j + 1]);
        }
    }

    std::size_t num_genes() const { return my_genes.size(); }
    std::size_t num_draws() const { return pi.size(); }
    const std::vector<std::string>& gene_ids() const { return my_genes; }
    Model model() const { return my_model; }

    bool empty() const { return pi.empty(); }

    /// Trace of one gene-level quantity across draws.
    std::vector<double> trace(const std::vector<double>& values, std::size_t gene) const {
        std::vector<double> out(num_draws());
        for (std::size_t d = 0; d < out.size(); ++d) {
            out[d] = values[d * num_genes() + gene];
        }
        return out;
    }

    /// Trace of the group-B log mean, mu_a + gamma.
    std::vector<double> mu_b_trace(std::size_t gene) const {
        std::vector<double> out(num_draws());
        for (std::size_t d = 0; d < out.size(); ++d) {
            out[d] = mu_a[d * num_genes() + gene] + gamma[d * num_genes() + gene];
        }
        return out;
    }

    /// Posterior DE probability of each gene: the fraction of draws with the indicator set.
    std::vector<double> de_probability() const {
        std::vector<double> out(num_genes(), 0.0);
        const auto m = num_genes();
        for (std::size_t d = 0; d < num_draws(); ++d) {
            for (std::size_t j = 0; j < m; ++j) {
                out[j] += indicator[d * m + j];
            }
        }
        for (auto& p : out) {
            p /= static_cast<double>(num_draws());
        }
        return out;
    }

    std::vector<double> pi, sigma_gamma_sq, psi0, tau_sq;
    std::vector<std::uint8_t> indicator;
    std::vector<double> gamma, mu_a, alpha_a, alpha_b;

    AcceptanceRecord acceptance;
    double wall_seconds = 0;

private:
    std::vector<std::string> my_genes;
    Model my_model = Model::lognormal;
};

}

#endif
