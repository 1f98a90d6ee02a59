#ifndef BADER_ENRICHMENT_HPP
#define BADER_ENRICHMENT_HPP

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "counts.hpp"
#include "model.hpp"
#include "posterior.hpp"

/**
 * @file enrichment.hpp
 * @brief Posterior gene-set enrichment under the competitive null.
 *
 * A set S is enriched in a draw when its fraction of DE genes strictly exceeds that of its complement;
 * the enrichment probability is the fraction of draws in which this happens.
 */

namespace bader {

struct GeneSet {
    std::string name;
    std::string description;
    std::vector<std::string> members;
};

/**
 * A gene set matched against a gene universe. Duplicate members count once.
 */
struct ResolvedSet {
    std::string name;
    std::size_t declared_size = 0;
    std::vector<std::size_t> indices;
    std::vector<std::string> unresolved;
};

class GeneSetCollection {
public:
    GeneSetCollection() = default;
    explicit GeneSetCollection(std::vector<GeneSet> sets) : my_sets(std::move(sets)) {}

    const std::vector<GeneSet>& sets() const { return my_sets; }
    std::size_t size() const { return my_sets.size(); }
    bool empty() const { return my_sets.empty(); }

    std::vector<ResolvedSet> resolve(const std::vector<std::string>& universe) const {
        std::unordered_map<std::string_view, std::size_t> lookup;
        for (std::size_t j = 0; j < universe.size(); ++j) {
            lookup.emplace(universe[j], j);
        }
        std::vector<ResolvedSet> out;
        out.reserve(my_sets.size());
        for (const auto& s : my_sets) {
            ResolvedSet r;
            r.name = s.name;
            r.declared_size = s.members.size();
            std::unordered_set<std::size_t> seen;
            for (const auto& g : s.members) {
                auto it = lookup.find(g);
                if (it == lookup.end()) {
                    r.unresolved.push_back(g);
                } else if (seen.insert(it->second).second) {
                    r.indices.push_back(it->second);
                }
            }
            std::sort(r.indices.begin(), r.indices.end());
            out.push_back(std::move(r));
        }
        return out;
    }

private:
    std::vector<GeneSet> my_sets;
};

/**
 * Read a GMT-style file: one set per line, `name<TAB>description<TAB>member...`. Blank lines are skipped.
 */
inline GeneSetCollection read_gmt(std::istream& in) {
    std::vector<GeneSet> sets;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        detail::strip_cr(line);
        if (line.empty()) {
            continue;
        }
        auto f = detail::split_tabs(line);
        if (f.size() < 2 || f[0].empty()) {
            throw FormatError("a gene set line needs a name and a description", row);
        }
        GeneSet s;
        s.name = std::string(f[0]);
        s.description = std::string(f[1]);
        for (std::size_t c = 2; c < f.size(); ++c) {
            if (!f[c].empty()) {
                s.members.emplace_back(f[c]);
            }
        }
        sets.push_back(std::move(s));
    }
    return GeneSetCollection(std::move(sets));
}

inline GeneSetCollection read_gmt(const std::string& path) {
    auto in = detail::open_input(path);
    return read_gmt(in);
}

inline void write_gmt(std::ostream& out, const GeneSetCollection& sets) {
    for (const auto& s : sets.sets()) {
        out << s.name << '\t' << s.description;
        for (const auto& g : s.members) {
            out << '\t' << g;
        }
        out << '\n';
    }
}

namespace detail {

inline void check_set(std::span<const std::size_t> set, std::size_t m) {
    if (set.empty()) {
        throw std::invalid_argument("gene set is empty");
    }
    if (set.size() >= m) {
        throw std::invalid_argument("gene set covers the whole gene universe; its complement is empty");
    }
}

}

/**
 * Fraction of draws where sum_{S} I / |S| > sum_{S^c} I / |S^c|, evaluated exactly in integer arithmetic.
 * `set` holds distinct gene indices.
 */
inline double enrichment_probability(const PosteriorDraws& draws, std::span<const std::size_t> set) {
    const auto m = draws.num_genes();
    detail::check_set(set, m);
    if (draws.empty()) {
        throw std::invalid_argument("no posterior draws");
    }
    const auto in_size = static_cast<std::int64_t>(set.size());
    const auto out_size = static_cast<std::int64_t>(m) - in_size;
    std::size_t hits = 0;
    for (std::size_t d = 0; d < draws.num_draws(); ++d) {
        const auto* ind = draws.indicator.data() + d * m;
        std::int64_t total = 0;
        for (std::size_t j = 0; j < m; ++j) {
            total += ind[j];
        }
        std::int64_t inside = 0;
        for (auto j : set) {
            inside += ind[j];
        }
        const auto outside = total - inside;
        if (inside * out_size > outside * in_size) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(draws.num_draws());
}

struct EnrichmentRow {
    std::string name;
    std::size_t size = 0;
    std::size_t n_resolved = 0;
    double probability = 0;
    /// Posterior mean number of DE genes in the set.
    double mean_de_count = 0;
};

/**
 * Evaluate every set. Sets that resolve to no genes, or to the whole universe, are errors.
 */
inline std::vector<EnrichmentRow> enrich_all(const PosteriorDraws& draws, const std::vector<ResolvedSet>& sets) {
    const auto p = draws.de_probability();
    std::vector<EnrichmentRow> out;
    out.reserve(sets.size());
    for (const auto& s : sets) {
        EnrichmentRow row;
        row.name = s.name;
        row.size = s.declared_size;
        row.n_resolved = s.indices.size();
        try {
            row.probability = enrichment_probability(draws, s.indices);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("set '" + s.name + "': " + e.what());
        }
        for (auto j : s.indices) {
            row.mean_de_count += p[j];
        }
        out.push_back(std::move(row));
    }
    return out;
}

inline void write_enrichment(std::ostream& out, const std::vector<EnrichmentRow>& rows) {
    out << "set\tsize\tn_resolved\tposterior_enrichment_probability\tmean_de_count\n";
    for (const auto& r : rows) {
        out << r.name << '\t' << r.size << '\t' << r.n_resolved << '\t';
        detail::put_double(out, r.probability);
        out << '\t';
        detail::put_double(out, r.mean_de_count);
        out << '\n';
    }
}

}

#endif
