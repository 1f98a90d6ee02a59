// Command-line front end: fit, simulate, enrich, evaluate, normalize.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "bader/bader.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/**
 * Reads a JSON object of option values for the subcommand named in `section`.
 * A run manifest is accepted too, in which case its "config" member is used.
 */
class JsonConfig : public CLI::Config {
public:
    std::string section;

    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json doc = json::parse(input);
        if (doc.contains("config") && doc["config"].is_object()) {
            doc = doc["config"];
        }
        if (!doc.is_object()) {
            throw CLI::ConversionError("configuration file must hold a JSON object");
        }
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : doc.items()) {
            if (value.is_null() || value.is_object()) {
                continue;
            }
            CLI::ConfigItem item;
            item.name = key;
            if (!section.empty()) {
                item.parents = {section};
            }
            if (value.is_array()) {
                for (const auto& v : value) {
                    item.inputs.push_back(scalar(v));
                }
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    static std::string scalar(const json& v) {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_boolean()) {
            return v.get<bool>() ? "true" : "false";
        }
        return v.dump();
    }
};

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buffer(1 << 16);
    while (in.read(buffer.data(), static_cast<std::streamsize>(buffer.size())) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return hex.str();
}

int default_threads() {
    if (const char* env = std::getenv("BADER_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) {
                return n;
            }
        } catch (const std::exception&) {
        }
        std::cerr << "bader: ignoring invalid BADER_THREADS='" << env << "'\n";
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/**
 * Collects the run manifest while a command executes and writes it as the last output.
 */
class Run {
public:
    Run(std::string command, const std::string& out_dir) : my_dir(out_dir), my_start(std::chrono::steady_clock::now()) {
        fs::create_directories(my_dir);
        manifest["command"] = std::move(command);
        manifest["version"] = bader::version;
        manifest["config"] = json::object();
        manifest["inputs"] = json::object();
        manifest["outputs"] = json::object();
    }

    void input(const std::string& role, const std::string& path) {
        manifest["inputs"][role] = {{"path", path}, {"sha256", sha256_file(path)}};
    }

    std::string path(const std::string& name) const { return (my_dir / name).string(); }

    void output(const std::string& name, const std::function<void(std::ostream&)>& fill) {
        const auto p = path(name);
        {
            std::ofstream out(p, std::ios::binary);
            if (!out) {
                throw std::runtime_error("cannot write '" + p + "'");
            }
            fill(out);
            if (!out) {
                throw std::runtime_error("error while writing '" + p + "'");
            }
        }
        manifest["outputs"][name] = sha256_file(p);
    }

    void finish() {
        manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - my_start).count();
        std::ofstream out(path("manifest.json"), std::ios::binary);
        out << manifest.dump(2) << '\n';
    }

    json manifest;

private:
    fs::path my_dir;
    std::chrono::steady_clock::time_point my_start;
};

bader::ConditionLabels labels_from(const std::string& labels_path, const std::string& conditions) {
    if (!labels_path.empty() && !conditions.empty()) {
        throw std::invalid_argument("give either --labels or --conditions, not both");
    }
    if (!labels_path.empty()) {
        return bader::load_labels(labels_path);
    }
    if (!conditions.empty()) {
        return bader::ConditionLabels::from_list(bader::parse_condition_list(conditions));
    }
    throw std::invalid_argument("condition labels are required (--labels FILE or --conditions A,A,B,B)");
}

void record_labels(Run& run, const std::string& labels_path, const std::string& conditions) {
    if (!labels_path.empty()) {
        run.manifest["config"]["labels"] = labels_path;
        run.input("labels", labels_path);
    } else {
        run.manifest["config"]["conditions"] = conditions;
    }
}

json acceptance_json(const bader::AcceptanceRecord& acc) {
    json out = {{"scans", acc.steps}};
    auto put = [&](const char* name, const std::vector<std::uint32_t>& counts) {
        const auto s = acc.summarize(counts);
        if (!s.empty) {
            out[name] = {{"mean", s.mean}, {"min", s.min}, {"max", s.max}};
        }
    };
    put("lambda", acc.lambda);
    put("alpha", acc.alpha);
    put("mixed", acc.mixed);
    return out;
}

struct FitOptions {
    std::string counts, labels, conditions, out;
    std::size_t iters = 20000, burnin = 10000, thin = 10;
    std::uint64_t seed = 1;
    std::string model = "lognormal";
    std::optional<double> fix_tau;
    bool allow_free_tau = false;
    int threads = 1;
    std::int64_t min_total = 5;
    bool write_draws = false;
    std::size_t progress_every = 1000;
};

int cmd_fit(const FitOptions& o) {
    bader::SamplerConfig config;
    config.n_iter = o.iters;
    config.n_burnin = o.burnin;
    config.thin = o.thin;
    config.seed = o.seed;
    config.model = bader::parse_model(o.model);
    config.fix_tau = o.fix_tau;
    config.allow_free_tau = o.allow_free_tau;
    config.threads = o.threads;
    config.validate();

    Run run("fit", o.out);
    auto& c = run.manifest["config"];
    c["counts"] = o.counts;
    record_labels(run, o.labels, o.conditions);
    c["iters"] = o.iters;
    c["burnin"] = o.burnin;
    c["thin"] = o.thin;
    c["seed"] = o.seed;
    c["model"] = o.model;
    if (o.fix_tau) {
        c["fix-tau"] = *o.fix_tau;
    }
    c["allow-free-tau"] = o.allow_free_tau;
    c["min-total"] = o.min_total;
    c["write-draws"] = o.write_draws;
    c["threads"] = o.threads;
    run.input("counts", o.counts);

    const auto raw = bader::load_counts(o.counts, labels_from(o.labels, o.conditions));
    const auto filtered = bader::filter_low_counts(raw, bader::FilterPolicy{o.min_total});
    const auto& cm = filtered.retained;
    const auto depths = bader::estimate_depths(cm);

    auto progress = [&](std::size_t t) {
        if (o.progress_every > 0 && (t % o.progress_every == 0 || t == o.iters)) {
            std::cerr << "fit: iteration " << t << '/' << o.iters << '\n';
        }
    };
    const auto draws = bader::run_chain(cm, depths, config, progress);

    run.output("summary.tsv", [&](std::ostream& out) { bader::write_summary(out, bader::summarize(draws)); });
    run.output("depths.tsv", [&](std::ostream& out) { bader::write_depths(out, cm, depths); });
    run.output("removed.tsv", [&](std::ostream& out) {
        out << "gene_id\n";
        for (const auto& g : filtered.removed_ids) {
            out << g << '\n';
        }
    });
    if (o.write_draws) {
        run.output("draws.tsv", [&](std::ostream& out) { bader::write_draws(out, draws); });
    }

    run.manifest["genes"] = {{"input", raw.num_genes()}, {"retained", cm.num_genes()}, {"removed", filtered.removed_ids.size()}};
    run.manifest["samples"] = {{"A", cm.samples_in(bader::Condition::A).size()}, {"B", cm.samples_in(bader::Condition::B).size()}};
    run.manifest["snapshots"] = draws.num_draws();
    run.manifest["acceptance"] = acceptance_json(draws.acceptance);
    run.manifest["sampler_seconds"] = draws.wall_seconds;
    run.finish();
    return 0;
}

struct SimulateOptions {
    std::string design = "sets", out, model = "lognormal";
    std::optional<std::size_t> m, n;
    std::optional<double> pi0;
    double depth_jitter = 0;
    std::uint64_t seed = 1;
};

int cmd_simulate(const SimulateOptions& o) {
    Run run("simulate", o.out);
    auto& c = run.manifest["config"];
    c["design"] = o.design;
    c["seed"] = o.seed;
    c["depth-jitter"] = o.depth_jitter;

    bader::SimulatedData data;
    json design;
    if (o.design == "sets" || o.design == "paper-3.2") {
        if (o.pi0 || o.model != "lognormal") {
            throw std::invalid_argument("--pi0 and --model apply to the flat design only");
        }
        bader::SimulationDesign d;
        d.seed = o.seed;
        d.depth_jitter_sd = o.depth_jitter;
        if (o.m) {
            if (*o.m == 0 || *o.m % d.set_size != 0) {
                throw std::invalid_argument("--m must be a positive multiple of the set size (" + std::to_string(d.set_size) + ")");
            }
            d.m = *o.m;
            d.n_sets = *o.m / d.set_size;
            c["m"] = *o.m;
        }
        if (o.n) {
            d.n_a = d.n_b = *o.n;
            c["n"] = *o.n;
        }
        data = bader::simulate_dataset(d);
        design = {{"m", d.m}, {"n_a", d.n_a}, {"n_b", d.n_b}, {"set_size", d.set_size}, {"n_sets", d.n_sets},
                  {"frac_enriched", d.frac_enriched}, {"p_de_null", d.p_de_null}, {"p_de_enriched", d.p_de_enriched},
                  {"psi0", d.psi0}, {"tau", d.tau}, {"sigma_gamma", d.sigma_gamma}, {"set_mean_loc", d.set_mean_loc},
                  {"set_mean_sd", d.set_mean_sd}, {"within_set_sd", d.within_set_sd}, {"depth_jitter_sd", d.depth_jitter_sd}};
    } else {
        bader::FlatDesign d;
        d.seed = o.seed;
        d.depth_jitter_sd = o.depth_jitter;
        d.model = bader::parse_model(o.model);
        c["model"] = o.model;
        if (o.m) {
            d.m = *o.m;
            c["m"] = *o.m;
        }
        if (o.n) {
            d.n = *o.n;
            c["n"] = *o.n;
        }
        if (o.pi0) {
            d.pi0 = *o.pi0;
            c["pi0"] = *o.pi0;
        }
        data = bader::simulate_flat(d);
        design = {{"m", d.m}, {"n", d.n}, {"pi0", d.pi0}, {"psi0", d.psi0}, {"sigma_gamma", d.sigma_gamma}, {"tau", d.tau},
                  {"mu_loc", d.mu_loc}, {"mu_sd", d.mu_sd}, {"depth_jitter_sd", d.depth_jitter_sd}, {"model", bader::to_string(d.model)}};
    }
    if (data.degenerate) {
        std::cerr << "simulate: warning: a condition has a single sample; within-group dispersion is not identified\n";
    }

    run.output("counts.tsv", [&](std::ostream& out) { bader::write_counts(out, data.counts); });
    run.output("labels.tsv", [&](std::ostream& out) { bader::write_labels(out, data.counts); });
    run.output("truth.tsv", [&](std::ostream& out) { bader::write_truth(out, data.counts, data.truth); });
    run.output("depths.tsv", [&](std::ostream& out) { bader::write_depths(out, data.counts, data.depths); });
    if (!data.truth.set_enriched.empty()) {
        run.output("sets.gmt", [&](std::ostream& out) { bader::write_gmt(out, bader::sets_from_truth(data.counts.gene_ids(), data.truth)); });
    }
    run.manifest["design"] = design;
    run.manifest["degenerate"] = data.degenerate;
    run.finish();
    return 0;
}

struct EnrichOptions {
    std::string draws, sets, out;
};

int cmd_enrich(const EnrichOptions& o) {
    Run run("enrich", o.out);
    run.manifest["config"]["draws"] = o.draws;
    run.manifest["config"]["sets"] = o.sets;
    run.input("draws", o.draws);
    run.input("sets", o.sets);

    const auto draws = bader::read_draws(o.draws);
    const auto collection = bader::read_gmt(o.sets);
    const auto resolved = collection.resolve(draws.gene_ids());

    json unresolved = json::object();
    for (const auto& s : resolved) {
        if (!s.unresolved.empty()) {
            std::cerr << "enrich: set '" << s.name << "': " << s.unresolved.size() << " of " << s.declared_size << " members not found:";
            for (const auto& g : s.unresolved) {
                std::cerr << ' ' << g;
            }
            std::cerr << '\n';
            unresolved[s.name] = s.unresolved;
        }
    }
    const auto rows = bader::enrich_all(draws, resolved);
    run.output("enrichment.tsv", [&](std::ostream& out) { bader::write_enrichment(out, rows); });
    run.manifest["sets"] = rows.size();
    run.manifest["unresolved"] = unresolved;
    run.finish();
    return 0;
}

struct NormalizeOptions {
    std::string counts, labels, conditions, out;
    std::int64_t min_total = 5;
};

int cmd_normalize(const NormalizeOptions& o) {
    Run run("normalize", o.out);
    run.manifest["config"]["counts"] = o.counts;
    record_labels(run, o.labels, o.conditions);
    run.manifest["config"]["min-total"] = o.min_total;
    run.input("counts", o.counts);

    const auto raw = bader::load_counts(o.counts, labels_from(o.labels, o.conditions));
    const auto filtered = bader::filter_low_counts(raw, bader::FilterPolicy{o.min_total});
    const auto depths = bader::estimate_depths(filtered.retained);
    run.output("depths.tsv", [&](std::ostream& out) { bader::write_depths(out, filtered.retained, depths); });
    run.manifest["genes"] = {{"input", raw.num_genes()}, {"retained", filtered.retained.num_genes()}};
    run.finish();
    return 0;
}

struct EvaluateOptions {
    std::string truth, sets, counts, labels, conditions, reference, out;
    std::vector<std::string> fits, subsamples;
    double level = 0.8;
    double baseline_alpha = 0.05;
    std::int64_t min_total = 5;
};

struct LoadedFit {
    std::string label;
    bader::PosteriorDraws draws;
};

std::string fit_label(const std::string& dir) {
    fs::path p = fs::path(dir).lexically_normal();
    if (p.filename().empty()) {
        p = p.parent_path();
    }
    return p.filename().string();
}

LoadedFit load_fit(const std::string& dir, Run& run, const std::string& role) {
    const auto draws_path = (fs::path(dir) / "draws.tsv").string();
    if (!fs::exists(draws_path)) {
        throw std::runtime_error("'" + dir + "' holds no draws.tsv (run fit with --write-draws)");
    }
    run.input(role + ":" + fit_label(dir), draws_path);
    LoadedFit out{fit_label(dir), bader::read_draws(draws_path)};
    const auto manifest_path = fs::path(dir) / "manifest.json";
    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        const auto m = json::parse(in);
        out.draws.wall_seconds = m.value("sampler_seconds", m.value("wall_seconds", 0.0));
    }
    return out;
}

/// Rows of `truth` for each gene of `genes`.
std::vector<std::size_t> truth_rows(const std::vector<std::string>& genes, const bader::TruthTable& truth, const std::string& what) {
    std::unordered_map<std::string_view, std::size_t> index;
    for (std::size_t r = 0; r < truth.gene_ids.size(); ++r) {
        index.emplace(truth.gene_ids[r], r);
    }
    std::vector<std::size_t> rows;
    rows.reserve(genes.size());
    for (const auto& g : genes) {
        auto it = index.find(g);
        if (it == index.end()) {
            throw std::invalid_argument("gene '" + g + "' of " + what + " is missing from the truth file");
        }
        rows.push_back(it->second);
    }
    return rows;
}

int cmd_evaluate(const EvaluateOptions& o) {
    if (!fs::exists(o.truth)) {
        throw std::runtime_error("truth file '" + o.truth + "' not found");
    }
    Run run("evaluate", o.out);
    auto& c = run.manifest["config"];
    c["truth"] = o.truth;
    c["fit"] = o.fits;
    c["level"] = o.level;
    run.input("truth", o.truth);
    const auto truth = bader::read_truth(o.truth);

    std::vector<LoadedFit> fits;
    for (const auto& dir : o.fits) {
        fits.push_back(load_fit(dir, run, "fit"));
    }

    std::optional<bader::GeneSetCollection> sets;
    std::unordered_map<std::string, int> set_truth;
    if (!o.sets.empty()) {
        c["sets"] = o.sets;
        run.input("sets", o.sets);
        sets = bader::read_gmt(o.sets);
        for (std::size_t r = 0; r < truth.gene_ids.size(); ++r) {
            if (truth.enriched[r] >= 0) {
                set_truth[truth.set_names[r]] = truth.enriched[r];
            }
        }
    }

    struct Curve {
        std::string level, method;
        bader::RocCurve roc;
    };
    std::vector<Curve> curves;

    auto set_curve = [&](const std::string& method, const std::vector<std::string>& universe, const std::function<std::vector<double>(const std::vector<bader::ResolvedSet>&)>& score,
                         bader::ScoreDirection direction) {
        std::vector<bader::ResolvedSet> usable;
        std::vector<std::uint8_t> labels;
        for (auto& s : sets->resolve(universe)) {
            auto it = set_truth.find(s.name);
            if (it == set_truth.end()) {
                throw std::invalid_argument("set '" + s.name + "' has no enrichment flag in the truth file");
            }
            if (s.indices.empty() || s.indices.size() >= universe.size()) {
                std::cerr << "evaluate: skipping set '" << s.name << "' for " << method << ": no usable members after filtering\n";
                continue;
            }
            labels.push_back(static_cast<std::uint8_t>(it->second));
            usable.push_back(std::move(s));
        }
        curves.push_back({"set", method, bader::roc(score(usable), labels, direction)});
    };

    std::vector<bader::SamplerComparisonRow> comparison;
    json coverage = json::array();
    for (const auto& f : fits) {
        const auto rows = truth_rows(f.draws.gene_ids(), truth, "fit '" + f.label + "'");
        std::vector<std::uint8_t> is_de;
        for (auto r : rows) {
            is_de.push_back(truth.values.indicator[r]);
        }
        curves.push_back({"gene", f.label, bader::roc(f.draws.de_probability(), is_de, bader::ScoreDirection::posterior_like)});
        if (sets) {
            set_curve(f.label, f.draws.gene_ids(), [&](const std::vector<bader::ResolvedSet>& usable) {
                std::vector<double> out;
                for (const auto& s : usable) {
                    out.push_back(bader::enrichment_probability(f.draws, s.indices));
                }
                return out;
            }, bader::ScoreDirection::posterior_like);
        }
        for (auto family : {bader::Family::mu, bader::Family::alpha}) {
            const auto values = bader::family_truth(truth.values, family, rows);
            const double cov = bader::interval_coverage(bader::family_traces(f.draws, family), values, o.level);
            coverage.push_back({{"fit", f.label}, {"reference", "truth"}, {"family", bader::to_string(family)}, {"level", o.level},
                                {"parameters", values.size()}, {"coverage", cov}});
        }
        comparison.push_back(bader::compare_to_truth(f.draws, truth.values, rows, f.label));
    }

    if (!o.counts.empty()) {
        c["counts"] = o.counts;
        record_labels(run, o.labels, o.conditions);
        c["min-total"] = o.min_total;
        c["baseline-alpha"] = o.baseline_alpha;
        run.input("counts", o.counts);
        const auto raw = bader::load_counts(o.counts, labels_from(o.labels, o.conditions));
        const auto filtered = bader::filter_low_counts(raw, bader::FilterPolicy{o.min_total});
        const auto& cm = filtered.retained;
        const auto depths = bader::estimate_depths(cm);
        const auto baseline = bader::ff_baseline(cm, depths, {}, o.baseline_alpha);
        const auto rows = truth_rows(cm.gene_ids(), truth, "the count matrix");
        std::vector<std::uint8_t> is_de;
        for (auto r : rows) {
            is_de.push_back(truth.values.indicator[r]);
        }
        curves.push_back({"gene", "welch", bader::roc(baseline.gene_pvalues, is_de, bader::ScoreDirection::pvalue_like)});
        if (sets) {
            set_curve("ff_fisher", cm.gene_ids(), [&](const std::vector<bader::ResolvedSet>& usable) {
                return bader::ff_baseline(cm, depths, usable, o.baseline_alpha).set_pvalues;
            }, bader::ScoreDirection::pvalue_like);
        }
    }

    if (!o.reference.empty()) {
        c["reference"] = o.reference;
        c["subsample"] = o.subsamples;
        const auto full = load_fit(o.reference, run, "reference");
        std::vector<bader::PosteriorDraws> subs;
        std::vector<std::string> names;
        for (const auto& dir : o.subsamples) {
            auto f = load_fit(dir, run, "subsample");
            names.push_back(f.label);
            subs.push_back(std::move(f.draws));
        }
        for (const auto& row : bader::coverage_experiment(full.draws, subs, o.level)) {
            coverage.push_back({{"fit", names[row.fit]}, {"reference", full.label}, {"family", bader::to_string(row.family)}, {"level", row.level},
                                {"parameters", row.num_parameters}, {"coverage", row.coverage}});
        }
    }

    run.output("roc.tsv", [&](std::ostream& out) {
        out << "level\tmethod\tfpr\ttpr\n";
        for (const auto& cv : curves) {
            for (std::size_t p = 0; p < cv.roc.fpr.size(); ++p) {
                out << cv.level << '\t' << cv.method << '\t';
                bader::detail::put_double(out, cv.roc.fpr[p]);
                out << '\t';
                bader::detail::put_double(out, cv.roc.tpr[p]);
                out << '\n';
            }
        }
    });
    run.output("auc.tsv", [&](std::ostream& out) {
        out << "level\tmethod\tauc\n";
        for (const auto& cv : curves) {
            out << cv.level << '\t' << cv.method << '\t';
            bader::detail::put_double(out, cv.roc.auc);
            out << '\n';
        }
    });
    run.output("coverage.tsv", [&](std::ostream& out) {
        out << "fit\treference\tfamily\tlevel\tparameters\tcoverage\n";
        for (const auto& r : coverage) {
            out << r["fit"].get<std::string>() << '\t' << r["reference"].get<std::string>() << '\t' << r["family"].get<std::string>() << '\t';
            bader::detail::put_double(out, r["level"].get<double>());
            out << '\t' << r["parameters"].get<std::size_t>() << '\t';
            bader::detail::put_double(out, r["coverage"].get<double>());
            out << '\n';
        }
    });
    if (!comparison.empty()) {
        run.output("samplers.tsv", [&](std::ostream& out) { bader::write_comparison(out, comparison); });
    }
    run.finish();
    return 0;
}

void add_labels_options(CLI::App* cmd, std::string& labels, std::string& conditions) {
    cmd->add_option("--labels", labels, "Two-column sample<TAB>condition file");
    cmd->add_option("--conditions", conditions, "Comma-separated condition of each count column, e.g. A,A,B,B");
}

}

int main(int argc, char** argv) {
    CLI::App app{"Bayesian differential expression and gene-set enrichment for RNA-seq counts"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(bader::version));
    auto formatter = std::make_shared<JsonConfig>();
    app.config_formatter(formatter);
    app.set_config("--config", "", "JSON file of subcommand options, or the manifest of an earlier run");
    app.fallthrough();

    FitOptions fit_opts;
    fit_opts.threads = default_threads();
    auto* fit = app.add_subcommand("fit", "Run the sampler on a count matrix");
    fit->add_option("--counts", fit_opts.counts, "Count matrix TSV")->required();
    add_labels_options(fit, fit_opts.labels, fit_opts.conditions);
    fit->add_option("--iters", fit_opts.iters, "Total iterations")->capture_default_str();
    fit->add_option("--burnin", fit_opts.burnin, "Discarded iterations")->capture_default_str();
    fit->add_option("--thin", fit_opts.thin, "Keep every k-th post-burn-in state")->capture_default_str();
    fit->add_option("--seed", fit_opts.seed, "Random seed")->capture_default_str();
    fit->add_option("--model", fit_opts.model, "Data model")->check(CLI::IsMember({"lognormal", "negbinom"}))->capture_default_str();
    fit->add_option("--fix-tau", fit_opts.fix_tau, "Hold tau (sd of the dispersion prior) at this value");
    fit->add_flag("--allow-free-tau", fit_opts.allow_free_tau, "Let the negative-binomial sampler update tau");
    fit->add_option("--threads", fit_opts.threads, "Worker threads (default: BADER_THREADS or all cores)")->check(CLI::PositiveNumber);
    fit->add_option("--min-total", fit_opts.min_total, "Drop genes whose total count is at most this")->capture_default_str();
    fit->add_flag("--write-draws", fit_opts.write_draws, "Also write every saved draw to draws.tsv");
    fit->add_option("--progress-every", fit_opts.progress_every, "Report progress every N iterations (0: never)")->capture_default_str();
    fit->add_option("--out", fit_opts.out, "Output directory")->required();

    SimulateOptions sim_opts;
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic data set with ground truth");
    sim->add_option("--design", sim_opts.design, "Simulation design")->check(CLI::IsMember({"sets", "flat", "paper-3.2"}))->capture_default_str();
    sim->add_option("--m", sim_opts.m, "Number of genes");
    sim->add_option("--n", sim_opts.n, "Samples per condition");
    sim->add_option("--model", sim_opts.model, "Generative model of the flat design")->check(CLI::IsMember({"lognormal", "negbinom"}));
    sim->add_option("--pi0", sim_opts.pi0, "DE probability of the flat design");
    sim->add_option("--depth-jitter", sim_opts.depth_jitter, "Standard deviation of log sampling depths");
    sim->add_option("--seed", sim_opts.seed, "Random seed")->capture_default_str();
    sim->add_option("--out", sim_opts.out, "Output directory")->required();

    EnrichOptions enrich_opts;
    auto* enrich = app.add_subcommand("enrich", "Posterior gene-set enrichment from saved draws");
    enrich->add_option("--draws", enrich_opts.draws, "draws.tsv written by fit --write-draws")->required();
    enrich->add_option("--sets", enrich_opts.sets, "Gene sets in GMT format")->required();
    enrich->add_option("--out", enrich_opts.out, "Output directory")->required();

    EvaluateOptions eval_opts;
    auto* evaluate = app.add_subcommand("evaluate", "Score fits against simulated ground truth");
    evaluate->add_option("--truth", eval_opts.truth, "truth.tsv written by simulate")->required();
    evaluate->add_option("--fit", eval_opts.fits, "Fit output directory (repeatable)");
    evaluate->add_option("--sets", eval_opts.sets, "Gene sets for set-level ROC");
    evaluate->add_option("--counts", eval_opts.counts, "Count matrix for the frequentist baseline");
    add_labels_options(evaluate, eval_opts.labels, eval_opts.conditions);
    evaluate->add_option("--min-total", eval_opts.min_total, "Low-count filter for the baseline")->capture_default_str();
    evaluate->add_option("--baseline-alpha", eval_opts.baseline_alpha, "Significance level of the baseline's gene calls")->capture_default_str();
    evaluate->add_option("--reference", eval_opts.reference, "Full-data fit for the subsampling coverage experiment");
    evaluate->add_option("--subsample", eval_opts.subsamples, "Subsample fit (repeatable)");
    evaluate->add_option("--level", eval_opts.level, "Credible level of the coverage intervals")->capture_default_str();
    evaluate->add_option("--out", eval_opts.out, "Output directory")->required();

    NormalizeOptions norm_opts;
    auto* normalize = app.add_subcommand("normalize", "Estimate sampling depths");
    normalize->add_option("--counts", norm_opts.counts, "Count matrix TSV")->required();
    add_labels_options(normalize, norm_opts.labels, norm_opts.conditions);
    normalize->add_option("--min-total", norm_opts.min_total, "Drop genes whose total count is at most this")->capture_default_str();
    normalize->add_option("--out", norm_opts.out, "Output directory")->required();

    for (int a = 1; a < argc; ++a) {
        if (app.get_subcommand_no_throw(argv[a]) != nullptr) {
            formatter->section = argv[a];
            break;
        }
    }
    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit) {
            return cmd_fit(fit_opts);
        }
        if (*sim) {
            return cmd_simulate(sim_opts);
        }
        if (*enrich) {
            return cmd_enrich(enrich_opts);
        }
        if (*evaluate) {
            return cmd_evaluate(eval_opts);
        }
        if (*normalize) {
            return cmd_normalize(norm_opts);
        }
    } catch (const std::exception& e) {
        std::cerr << "bader: error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
