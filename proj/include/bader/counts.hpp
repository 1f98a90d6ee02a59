#ifndef BADER_COUNTS_HPP
#define BADER_COUNTS_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

/**
 * @file counts.hpp
 * @brief Count matrices, their TSV format, low-count filtering and sampling depths.
 */

namespace bader {

enum class Condition : std::uint8_t { A = 0, B = 1 };

inline char to_char(Condition c) { return c == Condition::A ? 'A' : 'B'; }

/**
 * @brief Input validation failure, carrying the 1-based row and column of the offending cell when known.
 *
 * A row or column of 0 means "not applicable".
 */
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& msg, std::size_t row = 0, std::size_t col = 0) :
        std::runtime_error(decorate(msg, row, col)), my_row(row), my_col(col) {}

    std::size_t row() const { return my_row; }
    std::size_t column() const { return my_col; }

private:
    static std::string decorate(const std::string& msg, std::size_t row, std::size_t col) {
        std::string out;
        if (row) {
            out += "row " + std::to_string(row);
            if (col) {
                out += ", column " + std::to_string(col);
            }
            out += ": ";
        } else if (col) {
            out += "column " + std::to_string(col) + ": ";
        }
        return out + msg;
    }

    std::size_t my_row, my_col;
};

/**
 * @brief Read counts for m genes across the samples of two conditions.
 *
 * Counts are stored gene-major, i.e., the count for gene `j` in sample `i` lives at `j * num_samples() + i`.
 * Instances are validated on construction and immutable afterwards.
 */
class CountMatrix {
public:
    CountMatrix() = default;

    CountMatrix(std::vector<std::int64_t> counts, std::vector<std::string> gene_ids,
                std::vector<std::string> sample_ids, std::vector<Condition> conditions) :
        my_counts(std::move(counts)),
        my_genes(std::move(gene_ids)),
        my_samples(std::move(sample_ids)),
        my_conditions(std::move(conditions))
    {
        if (my_samples.size() != my_conditions.size()) {
            throw FormatError("got " + std::to_string(my_conditions.size()) + " condition labels for "
                              + std::to_string(my_samples.size()) + " samples");
        }
        if (my_counts.size() != my_genes.size() * my_samples.size()) {
            throw FormatError("count buffer does not match genes x samples");
        }

        std::unordered_map<std::string_view, std::size_t> seen;
        for (std::size_t j = 0; j < my_genes.size(); ++j) {
            auto [it, fresh] = seen.emplace(my_genes[j], j);
            if (!fresh) {
                throw FormatError("duplicate gene id '" + my_genes[j] + "' (first seen at gene " + std::to_string(it->second + 1) + ")", j + 1);
            }
        }

        for (std::size_t i = 0; i < my_conditions.size(); ++i) {
            (my_conditions[i] == Condition::A ? my_a : my_b).push_back(i);
        }
        if (my_a.empty() || my_b.empty()) {
            throw FormatError("need at least one sample in each condition");
        }

        const auto n = my_samples.size();
        for (std::size_t x = 0; x < my_counts.size(); ++x) {
            if (my_counts[x] < 0) {
                throw FormatError("negative count", x / n + 1, x % n + 1);
            }
        }
    }

    std::size_t num_genes() const { return my_genes.size(); }
    std::size_t num_samples() const { return my_samples.size(); }

    std::int64_t operator()(std::size_t gene, std::size_t sample) const { return my_counts[gene * num_samples() + sample]; }

    const std::vector<std::int64_t>& data() const { return my_counts; }
    const std::vector<std::string>& gene_ids() const { return my_genes; }
    const std::vector<std::string>& sample_ids() const { return my_samples; }
    const std::vector<Condition>& conditions() const { return my_conditions; }

    /// Column indices of the samples in each condition, in input order.
    const std::vector<std::size_t>& samples_in(Condition c) const { return c == Condition::A ? my_a : my_b; }

    std::int64_t gene_total(std::size_t gene) const {
        std::int64_t total = 0;
        const auto n = num_samples();
        for (std::size_t i = 0; i < n; ++i) {
            total += my_counts[gene * n + i];
        }
        return total;
    }

    bool operator==(const CountMatrix&) const = default;

private:
    std::vector<std::int64_t> my_counts;
    std::vector<std::string> my_genes;
    std::vector<std::string> my_samples;
    std::vector<Condition> my_conditions;
    std::vector<std::size_t> my_a, my_b;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "' for reading");
    }
    return in;
}

}

inline Condition parse_condition(std::string_view s) {
    if (s == "A" || s == "a") {
        return Condition::A;
    }
    if (s == "B" || s == "b") {
        return Condition::B;
    }
    throw FormatError("condition label must be A or B, got '" + std::string(s) + "'");
}

/**
 * Parse a comma-separated label list such as "A,A,B,B".
 */
inline std::vector<Condition> parse_condition_list(std::string_view s) {
    std::vector<Condition> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto pos = s.find(',', start);
        auto tok = s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        out.push_back(parse_condition(tok));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

/**
 * Condition labels, either positional or keyed by sample name (from a two-column `sample<TAB>condition` file).
 */
struct ConditionLabels {
    std::vector<Condition> positional;
    std::vector<std::pair<std::string, Condition>> by_sample;

    static ConditionLabels from_list(std::vector<Condition> labels) {
        ConditionLabels out;
        out.positional = std::move(labels);
        return out;
    }

    /// Resolve labels for the given sample names.
    std::vector<Condition> resolve(const std::vector<std::string>& samples) const {
        if (by_sample.empty()) {
            if (positional.size() != samples.size()) {
                throw FormatError("got " + std::to_string(positional.size()) + " condition labels for "
                                  + std::to_string(samples.size()) + " count columns");
            }
            return positional;
        }
        std::unordered_map<std::string, Condition> lookup(by_sample.begin(), by_sample.end());
        if (lookup.size() != samples.size() || by_sample.size() != samples.size()) {
            throw FormatError("label file names " + std::to_string(by_sample.size()) + " samples but the count table has "
                              + std::to_string(samples.size()) + " count columns");
        }
        std::vector<Condition> out;
        out.reserve(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            auto it = lookup.find(samples[i]);
            if (it == lookup.end()) {
                throw FormatError("sample '" + samples[i] + "' has no condition label", 1, i + 2);
            }
            out.push_back(it->second);
        }
        return out;
    }
};

/**
 * Read a two-column `sample<TAB>condition` file. A first line of `sample<TAB>condition` is treated as a header.
 */
inline ConditionLabels load_labels(const std::string& path) {
    auto in = detail::open_input(path);
    ConditionLabels out;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        detail::strip_cr(line);
        if (line.empty()) {
            continue;
        }
        auto fields = detail::split_tabs(line);
        if (fields.size() != 2) {
            throw FormatError("expected 2 tab-separated fields in label file, got " + std::to_string(fields.size()), row);
        }
        if (row == 1 && fields[0] == "sample" && fields[1] == "condition") {
            continue;
        }
        try {
            out.by_sample.emplace_back(std::string(fields[0]), parse_condition(fields[1]));
        } catch (const FormatError& e) {
            throw FormatError(e.what(), row, 2);
        }
    }
    return out;
}

/**
 * @brief Read a count table.
 *
 * The header is `gene<TAB>sample1...sampleN`; each following row holds a gene id and N non-negative integer counts.
 * Rows keep their input order.
 */
inline CountMatrix load_counts(std::istream& in, const ConditionLabels& labels) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty count table", 1);
    }
    detail::strip_cr(line);
    auto header = detail::split_tabs(line);
    if (header.size() < 2) {
        throw FormatError("header needs a gene column and at least one sample column", 1);
    }
    std::vector<std::string> samples(header.begin() + 1, header.end());
    const auto n = samples.size();
    auto conditions = labels.resolve(samples);

    std::vector<std::string> genes;
    std::vector<std::int64_t> counts;
    std::unordered_map<std::string, std::size_t> first_row;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        detail::strip_cr(line);
        if (line.empty()) {
            continue;
        }
        auto fields = detail::split_tabs(line);
        if (fields.size() != n + 1) {
            throw FormatError("expected " + std::to_string(n + 1) + " fields, got " + std::to_string(fields.size()), row);
        }
        if (fields[0].empty()) {
            throw FormatError("empty gene id", row, 1);
        }
        auto [it, fresh] = first_row.emplace(std::string(fields[0]), row);
        if (!fresh) {
            throw FormatError("duplicate gene id '" + it->first + "' (first seen on row " + std::to_string(it->second) + ")", row, 1);
        }
        genes.emplace_back(fields[0]);
        for (std::size_t c = 1; c <= n; ++c) {
            auto f = fields[c];
            std::int64_t value = 0;
            auto res = std::from_chars(f.data(), f.data() + f.size(), value);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size() || f.empty()) {
                throw FormatError("count '" + std::string(f) + "' is not an integer", row, c + 1);
            }
            if (value < 0) {
                throw FormatError("negative count '" + std::string(f) + "'", row, c + 1);
            }
            counts.push_back(value);
        }
    }

    return CountMatrix(std::move(counts), std::move(genes), std::move(samples), std::move(conditions));
}

inline CountMatrix load_counts(const std::string& path, const ConditionLabels& labels) {
    auto in = detail::open_input(path);
    return load_counts(in, labels);
}

inline void write_counts(std::ostream& out, const CountMatrix& cm) {
    out << "gene";
    for (const auto& s : cm.sample_ids()) {
        out << '\t' << s;
    }
    out << '\n';
    for (std::size_t j = 0; j < cm.num_genes(); ++j) {
        out << cm.gene_ids()[j];
        for (std::size_t i = 0; i < cm.num_samples(); ++i) {
            out << '\t' << cm(j, i);
        }
        out << '\n';
    }
}

inline void write_labels(std::ostream& out, const CountMatrix& cm) {
    out << "sample\tcondition\n";
    for (std::size_t i = 0; i < cm.num_samples(); ++i) {
        out << cm.sample_ids()[i] << '\t' << to_char(cm.conditions()[i]) << '\n';
    }
}

/**
 * Genes whose summed count across all samples is at most `min_total_count` are excluded.
 */
struct FilterPolicy {
    std::int64_t min_total_count = 5;
};

struct FilterResult {
    CountMatrix retained;
    /// Row index in the input matrix of each retained gene.
    std::vector<std::size_t> retained_rows;
    std::vector<std::string> removed_ids;
};

inline FilterResult filter_low_counts(const CountMatrix& cm, const FilterPolicy& policy) {
    FilterResult out;
    std::vector<std::int64_t> counts;
    std::vector<std::string> genes;
    const auto n = cm.num_samples();
    for (std::size_t j = 0; j < cm.num_genes(); ++j) {
        if (cm.gene_total(j) > policy.min_total_count) {
            genes.push_back(cm.gene_ids()[j]);
            out.retained_rows.push_back(j);
            auto first = cm.data().begin() + static_cast<std::ptrdiff_t>(j * n);
            counts.insert(counts.end(), first, first + static_cast<std::ptrdiff_t>(n));
        } else {
            out.removed_ids.push_back(cm.gene_ids()[j]);
        }
    }
    if (genes.empty()) {
        throw std::runtime_error("all " + std::to_string(cm.num_genes()) + " genes have total count <= "
                                 + std::to_string(policy.min_total_count) + "; nothing left to analyze");
    }
    out.retained = CountMatrix(std::move(counts), std::move(genes), cm.sample_ids(), cm.conditions());
    return out;
}

/**
 * Per-sample scale factors (sampling depths), all strictly positive and finite.
 */
class SamplingDepths {
public:
    SamplingDepths() = default;
    explicit SamplingDepths(std::vector<double> s) : my_values(std::move(s)) {
        for (std::size_t i = 0; i < my_values.size(); ++i) {
            if (!(my_values[i] > 0) || !std::isfinite(my_values[i])) {
                throw std::invalid_argument("sampling depth of sample " + std::to_string(i + 1) + " is not positive and finite");
            }
        }
    }

    static SamplingDepths unit(std::size_t n) { return SamplingDepths(std::vector<double>(n, 1.0)); }

    std::size_t size() const { return my_values.size(); }
    double operator[](std::size_t i) const { return my_values[i]; }
    const std::vector<double>& values() const { return my_values; }

private:
    std::vector<double> my_values;
};

namespace detail {

inline double median_inplace(std::vector<double>& x) {
    const auto n = x.size();
    const auto mid = x.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(x.begin(), mid, x.end());
    double upper = *mid;
    if (n % 2 == 1) {
        return upper;
    }
    double lower = *std::max_element(x.begin(), mid);
    return (lower + upper) / 2;
}

}

/**
 * @brief Median-of-ratios sampling depths.
 *
 * For each sample, the depth is the median over genes of the count divided by the gene's geometric mean across samples.
 * Only genes with all counts positive take part.
 * Depths are then rescaled to have a geometric mean of 1.
 */
inline SamplingDepths estimate_depths(const CountMatrix& cm) {
    const auto n = cm.num_samples();
    std::vector<std::vector<double>> log_ratios(n);
    std::vector<double> logs(n);

    for (std::size_t j = 0; j < cm.num_genes(); ++j) {
        bool usable = true;
        double mean_log = 0;
        for (std::size_t i = 0; i < n; ++i) {
            auto k = cm(j, i);
            if (k <= 0) {
                usable = false;
                break;
            }
            logs[i] = std::log(static_cast<double>(k));
            mean_log += logs[i];
        }
        if (!usable) {
            continue;
        }
        mean_log /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            log_ratios[i].push_back(logs[i] - mean_log);
        }
    }

    if (log_ratios.front().empty()) {
        throw std::runtime_error("no gene has positive counts in every sample; cannot estimate sampling depths (try a stricter low-count filter)");
    }

    // The median of log-ratios equals the log of the median ratio for odd counts; for even counts we average
    // on the ratio scale, as the estimator is defined on ratios.
    std::vector<double> depths(n);
    double mean_log_depth = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& lr = log_ratios[i];
        for (auto& x : lr) {
            x = std::exp(x);
        }
        depths[i] = detail::median_inplace(lr);
        mean_log_depth += std::log(depths[i]);
    }
    mean_log_depth /= static_cast<double>(n);
    const double centre = std::exp(mean_log_depth);
    for (auto& d : depths) {
        d /= centre;
    }
    return SamplingDepths(std::move(depths));
}

inline void write_depths(std::ostream& out, const CountMatrix& cm, const SamplingDepths& depths) {
    out << "sample\tdepth\n";
    char buffer[64];
    for (std::size_t i = 0; i < cm.num_samples(); ++i) {
        auto res = std::to_chars(buffer, buffer + sizeof(buffer), depths[i]);
        out << cm.sample_ids()[i] << '\t' << std::string_view(buffer, static_cast<std::size_t>(res.ptr - buffer)) << '\n';
    }
}

}

#endif
