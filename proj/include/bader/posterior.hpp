#ifndef BADER_POSTERIOR_HPP
#define BADER_POSTERIOR_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "counts.hpp"
#include "model.hpp"

/**
 * @file posterior.hpp
 * @brief Posterior summaries and the on-disk formats of saved draws.
 */

namespace bader {

/**
 * Sample quantile with linear interpolation between order statistics (R's type 7).
 * `sorted` must be in ascending order and non-empty.
 */
inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
    if (sorted.empty()) {
        throw std::invalid_argument("quantile of an empty sample");
    }
    const double h = (static_cast<double>(sorted.size()) - 1) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> x, double prob) {
    std::sort(x.begin(), x.end());
    return quantile_sorted(x, prob);
}

inline double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

struct GeneSummary {
    std::string gene_id;
    double p_de = 0;
    double gamma_mean = 0;
    double gamma_median = 0;
    double gamma_q025 = 0, gamma_q25 = 0, gamma_q75 = 0, gamma_q975 = 0;
    double alpha_a_median = 0;
    double alpha_b_median = 0;
};

inline std::vector<GeneSummary> summarize(const PosteriorDraws& draws) {
    if (draws.empty()) {
        throw std::invalid_argument("no posterior draws to summarize");
    }
    const auto p = draws.de_probability();
    std::vector<GeneSummary> out(draws.num_genes());
    for (std::size_t j = 0; j < out.size(); ++j) {
        auto& g = out[j];
        g.gene_id = draws.gene_ids()[j];
        g.p_de = p[j];
        auto gam = draws.trace(draws.gamma, j);
        double sum = 0;
        for (auto v : gam) {
            sum += v;
        }
        g.gamma_mean = sum / static_cast<double>(gam.size());
        std::sort(gam.begin(), gam.end());
        g.gamma_median = quantile_sorted(gam, 0.5);
        g.gamma_q025 = quantile_sorted(gam, 0.025);
        g.gamma_q25 = quantile_sorted(gam, 0.25);
        g.gamma_q75 = quantile_sorted(gam, 0.75);
        g.gamma_q975 = quantile_sorted(gam, 0.975);
        g.alpha_a_median = median(draws.trace(draws.alpha_a, j));
        g.alpha_b_median = median(draws.trace(draws.alpha_b, j));
    }
    return out;
}

namespace detail {

/// Shortest representation that reads back to the same double.
inline void put_double(std::ostream& out, double x) {
    char buffer[32];
    auto res = std::to_chars(buffer, buffer + sizeof(buffer), x);
    out.write(buffer, res.ptr - buffer);
}

inline double parse_double(std::string_view s, std::size_t row, std::size_t col) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        throw FormatError("'" + std::string(s) + "' is not a number", row, col);
    }
    return v;
}

}

inline void write_summary(std::ostream& out, const std::vector<GeneSummary>& summary) {
    out << "gene_id\tp_de\tgamma_mean\tgamma_median\tgamma_q2.5\tgamma_q25\tgamma_q75\tgamma_q97.5\talpha_a_median\talpha_b_median\n";
    for (const auto& g : summary) {
        out << g.gene_id;
        for (double v : {g.p_de, g.gamma_mean, g.gamma_median, g.gamma_q025, g.gamma_q25, g.gamma_q75, g.gamma_q975, g.alpha_a_median, g.alpha_b_median}) {
            out << '\t';
            detail::put_double(out, v);
        }
        out << '\n';
    }
}

/// Per-gene columns of the draws file, in block order.
inline constexpr std::string_view draw_fields[] = {"I", "gamma", "mu_a", "alpha_a", "alpha_b"};

/**
 * @brief Write the draws file.
 *
 * The first line is a manifest `#model=<name>\tgenes=<m>\tdraws=<L>`; the second is a header naming every column:
 * `pi, sigma_gamma_sq, psi0, tau_sq`, then for each gene the block `<id>:I, <id>:gamma, <id>:mu_a, <id>:alpha_a, <id>:alpha_b`.
 * Each further line is one saved draw.
 */
inline void write_draws(std::ostream& out, const PosteriorDraws& draws) {
    const auto m = draws.num_genes();
    out << "#model=" << to_string(draws.model()) << "\tgenes=" << m << "\tdraws=" << draws.num_draws() << '\n';
    out << "pi\tsigma_gamma_sq\tpsi0\ttau_sq";
    for (const auto& g : draws.gene_ids()) {
        for (auto f : draw_fields) {
            out << '\t' << g << ':' << f;
        }
    }
    out << '\n';
    for (std::size_t d = 0; d < draws.num_draws(); ++d) {
        for (double v : {draws.pi[d], draws.sigma_gamma_sq[d], draws.psi0[d], draws.tau_sq[d]}) {
            detail::put_double(out, v);
            out << '\t';
        }
        for (std::size_t j = 0; j < m; ++j) {
            const auto x = d * m + j;
            out << (draws.indicator[x] ? '1' : '0');
            for (double v : {draws.gamma[x], draws.mu_a[x], draws.alpha_a[x], draws.alpha_b[x]}) {
                out << '\t';
                detail::put_double(out, v);
            }
            out << (j + 1 < m ? '\t' : '\n');
        }
        if (m == 0) {
            out << '\n';
        }
    }
}

inline PosteriorDraws read_draws(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("#model=", 0) != 0) {
        throw FormatError("draws file must start with a '#model=' manifest line", 1);
    }
    detail::strip_cr(line);
    auto manifest = detail::split_tabs(std::string_view(line).substr(1));
    Model model = parse_model(std::string(manifest.at(0).substr(6)));

    if (!std::getline(in, line)) {
        throw FormatError("missing header line", 2);
    }
    detail::strip_cr(line);
    auto header = detail::split_tabs(line);
    constexpr std::size_t n_hyper = 4;
    constexpr std::size_t block = std::size(draw_fields);
    if (header.size() < n_hyper || (header.size() - n_hyper) % block != 0) {
        throw FormatError("header has " + std::to_string(header.size()) + " columns; expected 4 + 5 per gene", 2);
    }
    const auto m = (header.size() - n_hyper) / block;
    std::vector<std::string> genes;
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t f = 0; f < block; ++f) {
            const auto col = header[n_hyper + j * block + f];
            const auto expected_suffix = ":" + std::string(draw_fields[f]);
            if (col.size() <= expected_suffix.size() || col.substr(col.size() - expected_suffix.size()) != expected_suffix) {
                throw FormatError("unexpected column name '" + std::string(col) + "'", 2, n_hyper + j * block + f + 1);
            }
            if (f == 0) {
                genes.emplace_back(col.substr(0, col.size() - expected_suffix.size()));
            }
        }
    }

    PosteriorDraws draws(std::move(genes), model);
    std::size_t row = 2;
    while (std::getline(in, line)) {
        ++row;
        detail::strip_cr(line);
        if (line.empty()) {
            continue;
        }
        auto fields = detail::split_tabs(line);
        if (fields.size() != header.size()) {
            throw FormatError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()), row);
        }
        draws.pi.push_back(detail::parse_double(fields[0], row, 1));
        draws.sigma_gamma_sq.push_back(detail::parse_double(fields[1], row, 2));
        draws.psi0.push_back(detail::parse_double(fields[2], row, 3));
        draws.tau_sq.push_back(detail::parse_double(fields[3], row, 4));
        for (std::size_t j = 0; j < m; ++j) {
            const auto base = n_hyper + j * block;
            const auto ind = fields[base];
            if (ind != "0" && ind != "1") {
                throw FormatError("indicator must be 0 or 1, got '" + std::string(ind) + "'", row, base + 1);
            }
            draws.indicator.push_back(ind == "1");
            draws.gamma.push_back(detail::parse_double(fields[base + 1], row, base + 2));
            draws.mu_a.push_back(detail::parse_double(fields[base + 2], row, base + 3));
            draws.alpha_a.push_back(detail::parse_double(fields[base + 3], row, base + 4));
            draws.alpha_b.push_back(detail::parse_double(fields[base + 4], row, base + 5));
        }
    }
    return draws;
}

inline PosteriorDraws read_draws(const std::string& path) {
    auto in = detail::open_input(path);
    return read_draws(in);
}

}

#endif
