#ifndef BADER_SIMULATION_HPP
#define BADER_SIMULATION_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "counts.hpp"
#include "model.hpp"
#include "posterior.hpp"
#include "rng.hpp"

/**
 * @file simulation.hpp
 * @brief Synthetic count data with known ground truth.
 */

namespace bader {

/**
 * Gene-set structured design: genes are split into equally sized sets, a fraction of which are enriched
 * for DE genes. Set-level mean log expressions are N(set_mean_loc, set_mean_sd^2) and gene-level
 * group-A log means are N(set mean, within_set_sd^2).
 */
struct SimulationDesign {
    std::size_t m = 5000;
    std::size_t n_a = 2;
    std::size_t n_b = 2;
    std::size_t set_size = 20;
    std::size_t n_sets = 250;
    double frac_enriched = 0.1;
    double p_de_null = 0.1;
    double p_de_enriched = 0.75;
    double psi0 = -3;
    double tau = 0.8;
    double sigma_gamma = std::log2(1.5);
    double set_mean_loc = 5;
    double set_mean_sd = 1;
    double within_set_sd = 0.5;
    /// Standard deviation of log sampling depths; zero fixes every depth at 1.
    double depth_jitter_sd = 0;
    std::uint64_t seed = 1;

    void validate() const {
        if (set_size * n_sets != m) {
            throw std::invalid_argument("set_size * n_sets must equal m");
        }
        if (n_a < 1 || n_b < 1) {
            throw std::invalid_argument("each condition needs at least one sample");
        }
        for (double p : {frac_enriched, p_de_null, p_de_enriched}) {
            if (!(p >= 0 && p <= 1)) {
                throw std::invalid_argument("probabilities must lie in [0, 1]");
            }
        }
        if (!(tau > 0) || !(sigma_gamma >= 0) || !(set_mean_sd >= 0) || !(within_set_sd >= 0) || !(depth_jitter_sd >= 0)) {
            throw std::invalid_argument("scale parameters must be non-negative (tau positive)");
        }
    }
};

/**
 * Flat design without set structure; group-A log means are N(mu_loc, mu_sd^2).
 */
struct FlatDesign {
    std::size_t m = 1000;
    std::size_t n = 2;
    double pi0 = 0.5;
    double psi0 = -3;
    double sigma_gamma = 0.8;
    double tau = 0.8;
    double mu_loc = 5;
    double mu_sd = 1;
    double depth_jitter_sd = 0;
    Model model = Model::lognormal;
    std::uint64_t seed = 1;

    void validate() const {
        if (m < 1 || n < 1) {
            throw std::invalid_argument("need at least one gene and one sample per condition");
        }
        if (!(pi0 >= 0 && pi0 <= 1)) {
            throw std::invalid_argument("pi0 must lie in [0, 1]");
        }
        if (!(tau > 0) || !(sigma_gamma >= 0) || !(mu_sd >= 0) || !(depth_jitter_sd >= 0)) {
            throw std::invalid_argument("scale parameters must be non-negative (tau positive)");
        }
    }
};

struct GroundTruth {
    std::vector<std::uint8_t> indicator;
    std::vector<double> gamma;
    std::vector<double> mu_a;
    std::vector<double> alpha_a;
    std::vector<double> alpha_b;
    /// Set of each gene, or -1 without set structure.
    std::vector<std::int64_t> set_id;
    std::vector<std::uint8_t> set_enriched;
};

struct SimulatedData {
    CountMatrix counts;
    SamplingDepths depths;
    GroundTruth truth;
    /// True when a condition has a single sample, which leaves dispersions unidentified from within-group spread.
    bool degenerate = false;
};

namespace detail {

inline std::uint64_t sim_stream_key(std::uint64_t stage, std::uint64_t index) { return (stage << 48) ^ index; }

inline std::vector<std::string> sample_names(std::size_t n_a, std::size_t n_b, std::vector<Condition>& conditions) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n_a; ++i) {
        out.push_back("A" + std::to_string(i + 1));
        conditions.push_back(Condition::A);
    }
    for (std::size_t i = 0; i < n_b; ++i) {
        out.push_back("B" + std::to_string(i + 1));
        conditions.push_back(Condition::B);
    }
    return out;
}

inline std::vector<std::string> gene_names(std::size_t m) {
    std::vector<std::string> out(m);
    for (std::size_t j = 0; j < m; ++j) {
        out[j] = "gene" + std::to_string(j + 1);
    }
    return out;
}

inline std::vector<double> draw_depths(std::size_t n, double jitter_sd, std::uint64_t seed) {
    std::vector<double> out(n, 1.0);
    if (jitter_sd > 0) {
        Stream rng(seed, sim_stream_key(4, 0), 0);
        for (auto& s : out) {
            s = std::exp(jitter_sd * rng.normal());
        }
    }
    return out;
}

/// Counts for one gene given its group log means and dispersions.
inline void draw_gene_counts(Stream& rng, Model model, double mu_a, double mu_b, double alpha_a, double alpha_b,
                             const std::vector<Condition>& conditions, const std::vector<double>& depths, std::int64_t* out) {
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        const bool in_b = conditions[i] == Condition::B;
        const double mu = in_b ? mu_b : mu_a;
        const double alpha = in_b ? alpha_b : alpha_a;
        double rate = 0;
        if (model == Model::lognormal) {
            rate = std::exp(mu + std::exp(0.5 * alpha) * rng.normal());
        } else {
            // Gamma with mean e^mu and squared coefficient of variation e^alpha.
            const double scv = std::exp(alpha);
            rate = rng.gamma(1.0 / scv) * std::exp(mu) * scv;
        }
        out[i] = rng.poisson(depths[i] * rate);
    }
}

}

/**
 * Simulate the set-structured design under the Poisson-lognormal model.
 * Exactly round(frac_enriched * n_sets) sets are enriched; genes are assigned to sets in consecutive blocks.
 */
inline SimulatedData simulate_dataset(const SimulationDesign& design) {
    design.validate();
    const auto m = design.m;
    std::vector<Condition> conditions;
    auto samples = detail::sample_names(design.n_a, design.n_b, conditions);
    const auto n = samples.size();
    auto depths = detail::draw_depths(n, design.depth_jitter_sd, design.seed);

    SimulatedData out;
    auto& truth = out.truth;
    truth.set_enriched.assign(design.n_sets, 0);
    {
        Stream rng(design.seed, detail::sim_stream_key(1, 0), 0);
        std::vector<std::size_t> order(design.n_sets);
        std::iota(order.begin(), order.end(), 0);
        const auto n_enriched = static_cast<std::size_t>(std::llround(design.frac_enriched * static_cast<double>(design.n_sets)));
        for (std::size_t l = 0; l < n_enriched; ++l) {
            std::swap(order[l], order[l + rng.below(design.n_sets - l)]);
            truth.set_enriched[order[l]] = 1;
        }
    }

    std::vector<double> set_means(design.n_sets);
    for (std::size_t l = 0; l < design.n_sets; ++l) {
        Stream rng(design.seed, detail::sim_stream_key(2, l), 0);
        set_means[l] = rng.normal(design.set_mean_loc, design.set_mean_sd);
    }

    std::vector<std::int64_t> counts(m * n);
    truth.indicator.resize(m);
    truth.gamma.resize(m);
    truth.mu_a.resize(m);
    truth.alpha_a.resize(m);
    truth.alpha_b.resize(m);
    truth.set_id.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        Stream rng(design.seed, detail::sim_stream_key(3, j), 0);
        const auto set = j / design.set_size;
        truth.set_id[j] = static_cast<std::int64_t>(set);
        truth.mu_a[j] = rng.normal(set_means[set], design.within_set_sd);
        const double p_de = truth.set_enriched[set] ? design.p_de_enriched : design.p_de_null;
        truth.indicator[j] = rng.bernoulli(p_de);
        truth.gamma[j] = truth.indicator[j] ? rng.normal(0.0, design.sigma_gamma) : 0.0;
        truth.alpha_a[j] = rng.normal(design.psi0, design.tau);
        truth.alpha_b[j] = rng.normal(design.psi0, design.tau);
        detail::draw_gene_counts(rng, Model::lognormal, truth.mu_a[j], truth.mu_a[j] + truth.gamma[j], truth.alpha_a[j], truth.alpha_b[j],
                                 conditions, depths, counts.data() + j * n);
    }

    out.counts = CountMatrix(std::move(counts), detail::gene_names(m), std::move(samples), std::move(conditions));
    out.depths = SamplingDepths(std::move(depths));
    out.degenerate = design.n_a < 2 || design.n_b < 2;
    return out;
}

/**
 * Simulate the flat design, with n samples per condition, under either data model.
 */
inline SimulatedData simulate_flat(const FlatDesign& design) {
    design.validate();
    const auto m = design.m;
    std::vector<Condition> conditions;
    auto samples = detail::sample_names(design.n, design.n, conditions);
    const auto n = samples.size();
    auto depths = detail::draw_depths(n, design.depth_jitter_sd, design.seed);

    SimulatedData out;
    auto& truth = out.truth;
    std::vector<std::int64_t> counts(m * n);
    truth.indicator.resize(m);
    truth.gamma.resize(m);
    truth.mu_a.resize(m);
    truth.alpha_a.resize(m);
    truth.alpha_b.resize(m);
    truth.set_id.assign(m, -1);
    for (std::size_t j = 0; j < m; ++j) {
        Stream rng(design.seed, detail::sim_stream_key(3, j), 0);
        truth.mu_a[j] = rng.normal(design.mu_loc, design.mu_sd);
        truth.indicator[j] = rng.bernoulli(design.pi0);
        truth.gamma[j] = truth.indicator[j] ? rng.normal(0.0, design.sigma_gamma) : 0.0;
        truth.alpha_a[j] = rng.normal(design.psi0, design.tau);
        truth.alpha_b[j] = rng.normal(design.psi0, design.tau);
        detail::draw_gene_counts(rng, design.model, truth.mu_a[j], truth.mu_a[j] + truth.gamma[j], truth.alpha_a[j], truth.alpha_b[j],
                                 conditions, depths, counts.data() + j * n);
    }

    out.counts = CountMatrix(std::move(counts), detail::gene_names(m), std::move(samples), std::move(conditions));
    out.depths = SamplingDepths(std::move(depths));
    out.degenerate = design.n < 2;
    return out;
}

/**
 * Ground-truth TSV: gene_id, set_id, enriched, I, gamma, mu_a, alpha_a, alpha_b.
 * Genes without a set carry "." in the set_id and enriched columns.
 */
inline void write_truth(std::ostream& out, const CountMatrix& cm, const GroundTruth& truth) {
    out << "gene_id\tset_id\tenriched\tI\tgamma\tmu_a\talpha_a\talpha_b\n";
    for (std::size_t j = 0; j < cm.num_genes(); ++j) {
        out << cm.gene_ids()[j] << '\t';
        if (truth.set_id[j] >= 0) {
            out << "set" << truth.set_id[j] + 1 << '\t' << int(truth.set_enriched[static_cast<std::size_t>(truth.set_id[j])]);
        } else {
            out << ".\t.";
        }
        out << '\t' << int(truth.indicator[j]);
        for (double v : {truth.gamma[j], truth.mu_a[j], truth.alpha_a[j], truth.alpha_b[j]}) {
            out << '\t';
            detail::put_double(out, v);
        }
        out << '\n';
    }
}

/**
 * Ground truth as read back from a truth TSV, keyed by gene id.
 */
struct TruthTable {
    std::vector<std::string> gene_ids;
    std::vector<std::string> set_names;
    std::vector<int> enriched;
    GroundTruth values;
};

inline TruthTable read_truth(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty truth file", 1);
    }
    TruthTable out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        detail::strip_cr(line);
        if (line.empty()) {
            continue;
        }
        auto f = detail::split_tabs(line);
        if (f.size() != 8) {
            throw FormatError("expected 8 fields, got " + std::to_string(f.size()), row);
        }
        out.gene_ids.emplace_back(f[0]);
        out.set_names.emplace_back(f[1]);
        out.enriched.push_back(f[2] == "." ? -1 : static_cast<int>(detail::parse_double(f[2], row, 3)));
        out.values.indicator.push_back(detail::parse_double(f[3], row, 4) != 0);
        out.values.gamma.push_back(detail::parse_double(f[4], row, 5));
        out.values.mu_a.push_back(detail::parse_double(f[5], row, 6));
        out.values.alpha_a.push_back(detail::parse_double(f[6], row, 7));
        out.values.alpha_b.push_back(detail::parse_double(f[7], row, 8));
    }
    return out;
}

inline TruthTable read_truth(const std::string& path) {
    auto in = detail::open_input(path);
    return read_truth(in);
}

}

#endif
