#ifndef BADER_DIAGNOSTICS_HPP
#define BADER_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "counts.hpp"
#include "enrichment.hpp"
#include "model.hpp"
#include "posterior.hpp"
#include "simulation.hpp"

/**
 * @file diagnostics.hpp
 * @brief MCMC efficiency and accuracy measures, ROC analysis and a frequentist comparator.
 */

namespace bader {

/**
 * @brief Effective sample size with Geyer's initial monotone sequence estimator.
 *
 * Sums of adjacent autocorrelation pairs are accumulated while positive and forced to be non-increasing;
 * ESS = L / (-1 + 2 * sum). The result is clipped to (0, L]. A constant chain has ESS 1 by convention.
 */
inline double effective_sample_size(std::span<const double> chain) {
    const auto n = chain.size();
    if (n < 10) {
        throw std::invalid_argument("effective sample size needs at least 10 draws");
    }
    const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centred(n);
    for (std::size_t t = 0; t < n; ++t) {
        centred[t] = chain[t] - mean;
    }
    auto autocov = [&](std::size_t lag) {
        double s = 0;
        for (std::size_t t = 0; t + lag < n; ++t) {
            s += centred[t] * centred[t + lag];
        }
        return s / static_cast<double>(n);
    };

    const double gamma0 = autocov(0);
    if (!(gamma0 > 0)) {
        return 1;
    }

    double sum = 0;
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
        double pair = (autocov(2 * k) + autocov(2 * k + 1)) / gamma0;
        if (pair <= 0) {
            break;
        }
        pair = std::min(pair, previous);
        previous = pair;
        sum += pair;
    }
    const double tau = -1 + 2 * sum;
    const double L = static_cast<double>(n);
    if (!(tau > 0)) {
        return L;
    }
    return std::min(L, L / tau);
}

/**
 * Continuous ranked probability score of a predictive sample against a realized value:
 * mean |X - y| - 0.5 * mean |X - X'|, with the second mean over all ordered pairs (including i = j).
 */
inline double crps(std::span<const double> samples, double truth) {
    if (samples.empty()) {
        throw std::invalid_argument("CRPS needs at least one sample");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double L = static_cast<double>(sorted.size());
    double abs_err = 0;
    double spread = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        abs_err += std::abs(sorted[i] - truth);
        spread += (2.0 * static_cast<double>(i) - L + 1.0) * sorted[i];
    }
    // sum_{i,j} |x_i - x_j| = 2 * sum_i (2i - L + 1) x_(i) over 0-based order statistics.
    const double out = abs_err / L - spread / (L * L);
    return std::max(0.0, out);
}

/// Gene-level parameter families reported by the accuracy measures; each has one trace per (gene, condition).
enum class Family { mu, alpha };

inline std::string to_string(Family f) { return f == Family::mu ? "mu" : "alpha"; }

/**
 * Traces for every (gene, condition) of a family, ordered gene-major with condition A before B.
 */
inline std::vector<std::vector<double>> family_traces(const PosteriorDraws& draws, Family family) {
    std::vector<std::vector<double>> out;
    out.reserve(2 * draws.num_genes());
    for (std::size_t j = 0; j < draws.num_genes(); ++j) {
        if (family == Family::mu) {
            out.push_back(draws.trace(draws.mu_a, j));
            out.push_back(draws.mu_b_trace(j));
        } else {
            out.push_back(draws.trace(draws.alpha_a, j));
            out.push_back(draws.trace(draws.alpha_b, j));
        }
    }
    return out;
}

/// True values of a family in the order of `family_traces()`, for the given genes of a truth record.
inline std::vector<double> family_truth(const GroundTruth& truth, Family family, std::span<const std::size_t> rows) {
    std::vector<double> out;
    out.reserve(2 * rows.size());
    for (auto j : rows) {
        if (family == Family::mu) {
            out.push_back(truth.mu_a[j]);
            out.push_back(truth.mu_a[j] + truth.gamma[j]);
        } else {
            out.push_back(truth.alpha_a[j]);
            out.push_back(truth.alpha_b[j]);
        }
    }
    return out;
}

/**
 * Fraction of traces whose central `level` credible interval contains the matching reference value.
 */
inline double interval_coverage(const std::vector<std::vector<double>>& traces, std::span<const double> reference, double level) {
    if (traces.size() != reference.size()) {
        throw std::invalid_argument("got " + std::to_string(reference.size()) + " reference values for " + std::to_string(traces.size()) + " parameters");
    }
    if (!(level >= 0 && level < 1)) {
        throw std::invalid_argument("credible level must lie in [0, 1)");
    }
    if (traces.empty()) {
        throw std::invalid_argument("no parameters to evaluate");
    }
    std::size_t covered = 0;
    for (std::size_t p = 0; p < traces.size(); ++p) {
        auto sorted = traces[p];
        std::sort(sorted.begin(), sorted.end());
        const double lo = quantile_sorted(sorted, (1 - level) / 2);
        const double hi = quantile_sorted(sorted, (1 + level) / 2);
        covered += (reference[p] >= lo && reference[p] <= hi);
    }
    return static_cast<double>(covered) / static_cast<double>(traces.size());
}

struct CoverageRow {
    std::size_t fit = 0;
    std::size_t num_samples = 0;
    Family family = Family::mu;
    double level = 0.8;
    std::size_t num_parameters = 0;
    double coverage = 0;
};

/**
 * @brief Coverage of full-data posterior medians by the central intervals of subsample fits.
 *
 * Every gene of a subsample fit must exist in the full fit; genes are matched by id.
 * `subsample_sizes` labels each subsample fit in the output and may be empty.
 */
inline std::vector<CoverageRow> coverage_experiment(const PosteriorDraws& full_fit, const std::vector<PosteriorDraws>& subsample_fits, double level,
                                                    const std::vector<std::size_t>& subsample_sizes = {}) {
    std::unordered_map<std::string_view, std::size_t> index;
    for (std::size_t j = 0; j < full_fit.num_genes(); ++j) {
        index.emplace(full_fit.gene_ids()[j], j);
    }

    std::vector<CoverageRow> out;
    for (auto family : {Family::mu, Family::alpha}) {
        const auto full_traces = family_traces(full_fit, family);
        std::vector<double> full_medians;
        full_medians.reserve(full_traces.size());
        for (const auto& t : full_traces) {
            full_medians.push_back(median(t));
        }

        for (std::size_t s = 0; s < subsample_fits.size(); ++s) {
            const auto& sub = subsample_fits[s];
            std::vector<double> reference;
            reference.reserve(2 * sub.num_genes());
            for (const auto& g : sub.gene_ids()) {
                auto it = index.find(g);
                if (it == index.end()) {
                    throw std::invalid_argument("gene '" + g + "' of subsample fit " + std::to_string(s + 1) + " is missing from the full fit");
                }
                reference.push_back(full_medians[2 * it->second]);
                reference.push_back(full_medians[2 * it->second + 1]);
            }
            CoverageRow row;
            row.fit = s;
            row.num_samples = s < subsample_sizes.size() ? subsample_sizes[s] : 0;
            row.family = family;
            row.level = level;
            row.num_parameters = reference.size();
            row.coverage = interval_coverage(family_traces(sub, family), reference, level);
            out.push_back(row);
        }
    }
    return out;
}

enum class ScoreDirection {
    /// Smaller is stronger evidence: called DE when score < q.
    pvalue_like,
    /// Larger is stronger evidence: called DE when score > 1 - q.
    posterior_like
};

struct RocCurve {
    std::vector<double> fpr;
    std::vector<double> tpr;
    double auc = 0;
};

/**
 * @brief ROC curve from sweeping the calling threshold over every distinct score.
 *
 * Tied scores enter together, so the curve has one point per distinct score plus the (0, 0) origin.
 * The area is computed with the trapezoidal rule, which counts ties as one half.
 */
inline RocCurve roc(std::span<const double> scores, std::span<const std::uint8_t> is_de, ScoreDirection direction) {
    if (scores.size() != is_de.size()) {
        throw std::invalid_argument("scores and truth have different lengths");
    }
    const auto n_pos = static_cast<std::size_t>(std::count_if(is_de.begin(), is_de.end(), [](auto x) { return x != 0; }));
    const auto n_neg = is_de.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw std::invalid_argument("ROC needs at least one positive and one negative case");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    const double sign = direction == ScoreDirection::posterior_like ? 1.0 : -1.0;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sign * scores[a] > sign * scores[b]; });

    RocCurve out;
    out.fpr.push_back(0);
    out.tpr.push_back(0);
    std::size_t tp = 0, fp = 0;
    for (std::size_t x = 0; x < order.size();) {
        const double s = scores[order[x]];
        while (x < order.size() && scores[order[x]] == s) {
            (is_de[order[x]] ? tp : fp) += 1;
            ++x;
        }
        const double f = static_cast<double>(fp) / static_cast<double>(n_neg);
        const double t = static_cast<double>(tp) / static_cast<double>(n_pos);
        out.auc += (f - out.fpr.back()) * (t + out.tpr.back()) / 2;
        out.fpr.push_back(f);
        out.tpr.push_back(t);
    }
    return out;
}

struct TestResult {
    double statistic = 0;
    double df = 0;
    double p_value = 1;
};

/**
 * Two-sided Welch two-sample t-test. Both groups need at least two observations.
 * When both groups have zero variance, the p-value is 1 for equal means and 0 otherwise.
 */
inline TestResult welch_t_test(std::span<const double> x, std::span<const double> y) {
    if (x.size() < 2 || y.size() < 2) {
        throw std::invalid_argument("Welch's t-test needs at least two observations per group");
    }
    auto moments = [](std::span<const double> v) {
        const double n = static_cast<double>(v.size());
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double ss = 0;
        for (auto a : v) {
            ss += (a - mean) * (a - mean);
        }
        return std::pair{mean, ss / (n - 1)};
    };
    const auto [mx, vx] = moments(x);
    const auto [my, vy] = moments(y);
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    const double ax = vx / nx, ay = vy / ny;
    const double se2 = ax + ay;

    TestResult out;
    if (!(se2 > 0)) {
        out.statistic = mx == my ? 0 : std::copysign(std::numeric_limits<double>::infinity(), mx - my);
        out.df = nx + ny - 2;
        out.p_value = mx == my ? 1 : 0;
        return out;
    }
    out.statistic = (mx - my) / std::sqrt(se2);
    out.df = se2 * se2 / (ax * ax / (nx - 1) + ay * ay / (ny - 1));
    boost::math::students_t_distribution<double> dist(out.df);
    out.p_value = std::min(1.0, 2 * boost::math::cdf(boost::math::complement(dist, std::abs(out.statistic))));
    return out;
}

inline double log_choose(double n, double k) {
    return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

/**
 * One-sided Fisher exact test for over-representation: P(X >= in_set_de) where X is hypergeometric with
 * `total` genes, `total_de` of them DE, and `set_size` drawn.
 */
inline double fisher_exact_greater(std::size_t in_set_de, std::size_t set_size, std::size_t total_de, std::size_t total) {
    if (set_size > total || total_de > total || in_set_de > set_size || in_set_de > total_de) {
        throw std::invalid_argument("inconsistent 2x2 table");
    }
    const auto hi = std::min(set_size, total_de);
    const auto lo_support = set_size + total_de > total ? set_size + total_de - total : 0;
    const auto start = std::max(in_set_de, lo_support);
    if (start > hi) {
        return 0;
    }
    const double N = static_cast<double>(total), K = static_cast<double>(total_de), n = static_cast<double>(set_size);
    const double denom = log_choose(N, n);
    std::vector<double> terms;
    for (auto x = start; x <= hi; ++x) {
        const double xd = static_cast<double>(x);
        terms.push_back(log_choose(K, xd) + log_choose(N - K, n - xd) - denom);
    }
    const double top = *std::max_element(terms.begin(), terms.end());
    double sum = 0;
    for (auto t : terms) {
        sum += std::exp(t - top);
    }
    return std::min(1.0, std::exp(top + std::log(sum)));
}

struct BaselineResult {
    std::vector<double> gene_pvalues;
    std::vector<std::uint8_t> gene_calls;
    std::vector<double> set_pvalues;
};

/**
 * @brief Frequentist comparator: per-gene Welch tests on log((k + 0.5) / s), DE calls at `alpha_level`,
 * then a one-sided Fisher exact over-representation test per set.
 */
inline BaselineResult ff_baseline(const CountMatrix& cm, const SamplingDepths& depths, const std::vector<ResolvedSet>& sets, double alpha_level) {
    const auto& in_a = cm.samples_in(Condition::A);
    const auto& in_b = cm.samples_in(Condition::B);
    if (in_a.size() < 2 || in_b.size() < 2) {
        throw std::invalid_argument("the per-gene baseline test needs at least two samples per condition");
    }
    BaselineResult out;
    const auto m = cm.num_genes();
    out.gene_pvalues.resize(m);
    out.gene_calls.resize(m);
    std::vector<double> x(in_a.size()), y(in_b.size());
    std::size_t total_de = 0;
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t a = 0; a < in_a.size(); ++a) {
            x[a] = std::log((static_cast<double>(cm(j, in_a[a])) + 0.5) / depths[in_a[a]]);
        }
        for (std::size_t b = 0; b < in_b.size(); ++b) {
            y[b] = std::log((static_cast<double>(cm(j, in_b[b])) + 0.5) / depths[in_b[b]]);
        }
        out.gene_pvalues[j] = welch_t_test(x, y).p_value;
        out.gene_calls[j] = out.gene_pvalues[j] < alpha_level;
        total_de += out.gene_calls[j];
    }
    for (const auto& s : sets) {
        std::size_t in_de = 0;
        for (auto j : s.indices) {
            in_de += out.gene_calls[j];
        }
        out.set_pvalues.push_back(fisher_exact_greater(in_de, s.indices.size(), total_de, m));
    }
    return out;
}

/**
 * Gene sets of a simulated design, named `set1`, `set2`, ... in set order. Genes without a set are skipped.
 */
inline GeneSetCollection sets_from_truth(const std::vector<std::string>& gene_ids, const GroundTruth& truth) {
    std::vector<GeneSet> sets(truth.set_enriched.size());
    for (std::size_t l = 0; l < sets.size(); ++l) {
        sets[l].name = "set" + std::to_string(l + 1);
        sets[l].description = "simulated";
    }
    for (std::size_t j = 0; j < gene_ids.size(); ++j) {
        if (truth.set_id[j] >= 0) {
            sets[static_cast<std::size_t>(truth.set_id[j])].members.push_back(gene_ids[j]);
        }
    }
    return GeneSetCollection(std::move(sets));
}

/**
 * One row of the sampler comparison table: run time, effective samples per minute and CRPS against truth,
 * each averaged over all (gene, condition) parameters of a family.
 */
struct SamplerComparisonRow {
    std::string label;
    Model model = Model::lognormal;
    double minutes = 0;
    double ess_per_min_alpha = 0;
    double ess_per_min_mu = 0;
    double crps_alpha = 0;
    double crps_mu = 0;
};

/**
 * `rows` maps each gene of the fit to its row in `truth`.
 */
inline SamplerComparisonRow compare_to_truth(const PosteriorDraws& fit, const GroundTruth& truth, std::span<const std::size_t> rows, std::string label = {}) {
    SamplerComparisonRow out;
    out.label = std::move(label);
    out.model = fit.model();
    out.minutes = fit.wall_seconds / 60;
    for (auto family : {Family::alpha, Family::mu}) {
        const auto traces = family_traces(fit, family);
        const auto values = family_truth(truth, family, rows);
        double ess = 0, score = 0;
        for (std::size_t p = 0; p < traces.size(); ++p) {
            ess += effective_sample_size(traces[p]);
            score += crps(traces[p], values[p]);
        }
        ess /= static_cast<double>(traces.size());
        score /= static_cast<double>(traces.size());
        const double per_min = out.minutes > 0 ? ess / out.minutes : std::numeric_limits<double>::infinity();
        if (family == Family::alpha) {
            out.ess_per_min_alpha = per_min;
            out.crps_alpha = score;
        } else {
            out.ess_per_min_mu = per_min;
            out.crps_mu = score;
        }
    }
    return out;
}

inline void write_comparison(std::ostream& out, const std::vector<SamplerComparisonRow>& rows) {
    out << "fit\tmodel\ttime_min\tess_per_min_alpha\tess_per_min_mu\tcrps_alpha\tcrps_mu\n";
    for (const auto& r : rows) {
        out << r.label << '\t' << to_string(r.model);
        for (double v : {r.minutes, r.ess_per_min_alpha, r.ess_per_min_mu, r.crps_alpha, r.crps_mu}) {
            out << '\t';
            detail::put_double(out, v);
        }
        out << '\n';
    }
}

}

#endif
