// Acceptance suite: one verdict line per criterion. Usage: acceptance [criterion ...]
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>

#include "bader/bader.hpp"
#include "collapsed_oracle.hpp"
#include "sbc.hpp"
#include "support.hpp"

using namespace bader;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* f, auto... args) {
    char buffer[512];
    std::snprintf(buffer, sizeof(buffer), f, args...);
    return buffer;
}

// Fastest of `repeats` timed lognormal scans, after a short warm-up; the minimum filters out scheduler noise.
double seconds_per_scan(std::size_t m, std::size_t n, std::size_t repeats) {
    FlatDesign d;
    d.m = m;
    d.n = n;
    d.seed = 11;
    const auto data = simulate_flat(d);
    SamplerConfig config;
    config.threads = 1;
    auto state = initial_state(data.counts, data.depths, config);
    LognormalProposals proposals(m, 2 * n);
    std::size_t t = 1;
    for (; t <= 3; ++t) {
        gibbs_scan(state, data.counts, data.depths, config, proposals, t);
    }
    std::vector<double> times;
    for (std::size_t r = 0; r < repeats; ++r, ++t) {
        const auto start = Clock::now();
        gibbs_scan(state, data.counts, data.depths, config, proposals, t);
        times.push_back(seconds_since(start));
    }
    return *std::min_element(times.begin(), times.end());
}

Verdict runtime() {
    const double big = seconds_per_scan(10000, 2, 15);
    std::vector<double> x, y;
    for (std::size_t m : {1000, 2000, 4000, 8000}) {
        for (std::size_t n : {2, 4, 6, 8}) {
            x.push_back(static_cast<double>(m * n));
            y.push_back(seconds_per_scan(m, n, 25));
        }
    }
    // Least squares y = a + b x.
    const double mx = testing_support::mean(x), my = testing_support::mean(y);
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    const double b = sxy / sxx, a = my - b * mx;
    double worst = 1;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double fitted = a + b * x[k];
        worst = fitted > 0 ? std::max(worst, std::max(y[k] / fitted, fitted / y[k])) : INFINITY;
        std::cerr << fmt("  m*n=%6.0f  %.5f s per scan, fitted %.5f\n", x[k], y[k], fitted);
    }
    return {big <= 0.5 && worst <= 1.5,
            fmt("scan at m=10000 n=2 takes %.4f s (limit 0.5); linear fit in m*n over 16 sizes has worst ratio %.3f (limit 1.5)", big, worst)};
}

Verdict oracle_equivalence() {
    const auto start = Clock::now();
    Stream rng(2024);
    const std::pair<std::size_t, std::size_t> sizes[] = {{2, 2}, {3, 3}, {2, 3}, {3, 2}, {1, 4}, {4, 2}, {2, 5}, {5, 5}};
    auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
    double worst = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const auto [na, nb] = sizes[rep % std::size(sizes)];
        const auto inst = testing_support::random_instance(rng, na, nb);
        const testing_support::CollapsedOracle oracle(inst);
        const auto aux = collapsed_aux(inst.lambda_a, inst.lambda_b, inst.alpha_a, inst.alpha_b, inst.sigma_gamma_sq);
        worst = std::max(worst, rel(indicator_probability(aux, inst.pi), oracle.prob_indicator()));
        for (bool ind : {false, true}) {
            const auto mu = mu_conditional(aux, ind);
            for (double z : {-2.5, -1.0, 0.0, 0.8, 2.0}) {
                const double at = mu.mean + z * std::sqrt(mu.var);
                worst = std::max(worst, rel(std::exp(mu.logpdf(at)), oracle.mu_density(at, ind)));
            }
        }
        for (double shift : {-0.4, 0.0, 0.5}) {
            const double mu_at = mu_conditional(aux, true).mean + shift;
            const auto g = gamma_conditional(aux, mu_at);
            for (double z : {-2.0, -0.5, 0.0, 1.5}) {
                const double at = g.mean + z * std::sqrt(g.var);
                worst = std::max(worst, rel(std::exp(g.logpdf(at)), oracle.gamma_density(at, mu_at)));
            }
        }
    }
    const double secs = seconds_since(start);
    return {worst < 1e-6 && secs < 60, fmt("20 instances, worst relative density error %.2e (limit 1e-6), %.1f s (limit 60)", worst, secs)};
}

Verdict calibration() {
    const auto start = Clock::now();
    const auto r = testing_support::run_sbc(testing_support::SbcSettings{});
    const double secs = seconds_since(start);
    return {r.gamma_p > 1e-3 && r.psi0_p > 1e-3 && secs <= 3600,
            fmt("500 replications, gamma rank p=%.4f, psi0 rank p=%.4f (limit 0.001), %.0f s", r.gamma_p, r.psi0_p, secs)};
}

// Lognormal fits and baselines on ten replicates of the set-structured design; shared by criteria 4 and 5.
struct DetectionReplicate {
    double gene_auc = 0, welch_auc = 0, set_auc = 0, fisher_auc = 0;
};

const std::vector<DetectionReplicate>& detection_replicates() {
    static const auto reps = [] {
        std::vector<DetectionReplicate> out;
        for (std::uint64_t r = 0; r < 10; ++r) {
            SimulationDesign d;
            d.m = 2000;
            d.n_sets = 100;
            d.seed = 300 + r;
            const auto data = simulate_dataset(d);
            const auto filtered = filter_low_counts(data.counts, FilterPolicy{5});
            const auto& cm = filtered.retained;
            const auto depths = estimate_depths(cm);
            SamplerConfig config;
            config.seed = r + 1;
            const auto fit = run_lognormal_chain(cm, depths, config);

            std::vector<std::uint8_t> is_de;
            for (auto row : filtered.retained_rows) {
                is_de.push_back(data.truth.indicator[row]);
            }
            std::vector<ResolvedSet> sets;
            std::vector<std::uint8_t> enriched;
            for (auto& s : sets_from_truth(data.counts.gene_ids(), data.truth).resolve(cm.gene_ids())) {
                if (!s.indices.empty() && s.indices.size() < cm.num_genes()) {
                    enriched.push_back(data.truth.set_enriched[static_cast<std::size_t>(std::stoul(s.name.substr(3)) - 1)]);
                    sets.push_back(std::move(s));
                }
            }
            const auto baseline = ff_baseline(cm, depths, sets, 0.05);
            std::vector<double> set_prob;
            for (const auto& s : sets) {
                set_prob.push_back(enrichment_probability(fit, s.indices));
            }
            DetectionReplicate rep;
            rep.gene_auc = roc(fit.de_probability(), is_de, ScoreDirection::posterior_like).auc;
            rep.welch_auc = roc(baseline.gene_pvalues, is_de, ScoreDirection::pvalue_like).auc;
            rep.set_auc = roc(set_prob, enriched, ScoreDirection::posterior_like).auc;
            rep.fisher_auc = roc(baseline.set_pvalues, enriched, ScoreDirection::pvalue_like).auc;
            std::cerr << fmt("  replicate %d: gene AUC %.4f vs %.4f, set AUC %.4f vs %.4f\n", static_cast<int>(r), rep.gene_auc, rep.welch_auc, rep.set_auc,
                             rep.fisher_auc);
            out.push_back(rep);
        }
        return out;
    }();
    return reps;
}

Verdict paired(double DetectionReplicate::*ours, double DetectionReplicate::*theirs, const char* what) {
    const auto& reps = detection_replicates();
    double a = 0, b = 0;
    int wins = 0;
    for (const auto& r : reps) {
        a += r.*ours;
        b += r.*theirs;
        wins += r.*ours > r.*theirs;
    }
    a /= static_cast<double>(reps.size());
    b /= static_cast<double>(reps.size());
    return {a > b && wins >= 8, fmt("%s: mean AUC %.4f vs baseline %.4f, better in %d/10 replicates (need 8)", what, a, b, wins)};
}

Verdict de_detection() { return paired(&DetectionReplicate::gene_auc, &DetectionReplicate::welch_auc, "genes"); }
Verdict enrichment_detection() { return paired(&DetectionReplicate::set_auc, &DetectionReplicate::fisher_auc, "sets"); }

Verdict coverage() {
    bool pass = true;
    std::string detail;
    for (std::size_t n : {2, 5}) {
        FlatDesign d;
        d.m = 1000;
        d.n = n;
        d.seed = 600 + n;
        const auto data = simulate_flat(d);
        SamplerConfig config;
        config.seed = n;
        const auto fit = run_lognormal_chain(data.counts, data.depths, config);
        std::vector<std::size_t> rows(d.m);
        std::iota(rows.begin(), rows.end(), 0);
        for (auto family : {Family::mu, Family::alpha}) {
            const double c = interval_coverage(family_traces(fit, family), family_truth(data.truth, family, rows), 0.8);
            pass &= c >= 0.65 && c <= 0.95;
            detail += fmt("%sn=%d %s %.3f", detail.empty() ? "" : ", ", static_cast<int>(n), to_string(family).c_str(), c);
        }
    }
    return {pass, "80% interval coverage " + detail + " (range 0.65 to 0.95)"};
}

Verdict sampler_comparison() {
    std::vector<SamplerComparisonRow> rows;
    for (auto model : {Model::lognormal, Model::negbinom}) {
        FlatDesign d;
        d.m = 1000;
        d.n = 2;
        d.model = model;
        d.seed = 700;
        const auto data = simulate_flat(d);
        SamplerConfig config;
        config.model = model;
        config.fix_tau = 0.8;
        config.n_burnin = 5000;
        config.n_iter = 15000;
        config.thin = 10;
        const auto fit = run_chain(data.counts, data.depths, config);
        std::vector<std::size_t> truth_rows(d.m);
        std::iota(truth_rows.begin(), truth_rows.end(), 0);
        rows.push_back(compare_to_truth(fit, data.truth, truth_rows, to_string(model)));
    }
    std::ostringstream table;
    write_comparison(table, rows);
    std::cerr << table.str();
    const auto& ln = rows[0];
    const auto& nb = rows[1];
    const double ratio = ln.ess_per_min_alpha / nb.ess_per_min_alpha;
    return {ratio >= 5 && ln.crps_alpha < nb.crps_alpha,
            fmt("alpha ESS/min %.1f vs %.1f (ratio %.1f, need 5); alpha CRPS %.4f vs %.4f", ln.ess_per_min_alpha, nb.ess_per_min_alpha, ratio, ln.crps_alpha,
                nb.crps_alpha)};
}

CountMatrix matrix_of(const std::vector<std::vector<std::int64_t>>& rows, std::vector<Condition> conditions) {
    std::vector<std::int64_t> flat;
    std::vector<std::string> genes, samples;
    for (std::size_t j = 0; j < rows.size(); ++j) {
        genes.push_back("g" + std::to_string(j + 1));
        flat.insert(flat.end(), rows[j].begin(), rows[j].end());
    }
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        samples.push_back("s" + std::to_string(i + 1));
    }
    return CountMatrix(std::move(flat), std::move(genes), std::move(samples), std::move(conditions));
}

Verdict estimator_suite() {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const char* what) {
        if (!ok) {
            failed.push_back(what);
        }
    };

    check(crps(std::vector<double>(5, 2.0), 2.0) == 0.0, "crps at the truth");
    check(std::abs(crps(std::vector<double>(5, 2.0), -1.0) - 3.0) < 1e-15, "crps of a constant");
    check(std::abs(crps(std::vector<double>{0, 1}, 0) - 0.25) < 1e-15, "crps of {0,1}");

    {
        std::vector<std::vector<std::uint64_t>> c(21);
        for (std::size_t n = 0; n <= 20; ++n) {
            c[n].assign(n + 1, 1);
            for (std::size_t k = 1; k < n; ++k) {
                c[n][k] = c[n - 1][k - 1] + c[n - 1][k];
            }
        }
        auto choose = [&](std::size_t n, std::size_t k) { return k > n ? 0 : c[n][k]; };
        double worst = 0;
        for (std::size_t total = 1; total <= 20; ++total) {
            for (std::size_t de = 0; de <= total; ++de) {
                for (std::size_t size = 0; size <= total; ++size) {
                    for (std::size_t a = 0; a <= std::min(de, size); ++a) {
                        std::uint64_t num = 0;
                        for (std::size_t x = a; x <= std::min(de, size); ++x) {
                            num += choose(de, x) * choose(total - de, size - x);
                        }
                        const double want = static_cast<double>(num) / static_cast<double>(choose(total, size));
                        worst = std::max(worst, std::abs(fisher_exact_greater(a, size, de, total) - want) / want);
                    }
                }
            }
        }
        check(worst < 1e-12, "fisher against enumeration");
    }

    {
        Stream rng(81);
        std::vector<double> s(200);
        std::vector<std::uint8_t> truth(200);
        for (std::size_t i = 0; i < s.size(); ++i) {
            truth[i] = i % 3 == 0;
            s[i] = static_cast<double>(rng.below(20)) + 2.0 * truth[i];
        }
        const double base = roc(s, truth, ScoreDirection::posterior_like).auc;
        std::vector<double> t, neg;
        for (double v : s) {
            t.push_back(std::log1p(v) * 4 + 1);
            neg.push_back(-v);
        }
        check(roc(t, truth, ScoreDirection::posterior_like).auc == base, "auc under monotone transforms");
        check(roc(neg, truth, ScoreDirection::pvalue_like).auc == base, "auc under direction flip");
        check(roc(std::vector<double>{1, 0, 0, 0}, std::vector<std::uint8_t>{1, 0, 0, 0}, ScoreDirection::posterior_like).auc == 1.0, "auc of a perfect ranking");
    }

    {
        const std::vector<Condition> conds{Condition::A, Condition::A, Condition::B, Condition::B};
        std::vector<std::vector<std::int64_t>> rows{{4, 5, 6, 7}, {8, 3, 2, 9}, {12, 14, 11, 1}, {7, 7, 7, 7}, {30, 22, 41, 25}};
        const auto base = estimate_depths(matrix_of(rows, conds));
        for (auto& r : rows) {
            r[1] *= 5;
        }
        const auto scaled = estimate_depths(matrix_of(rows, conds));
        check(std::abs(scaled[1] / scaled[0] - 5 * base[1] / base[0]) < 1e-12 && std::abs(scaled[3] / scaled[2] - base[3] / base[2]) < 1e-12,
              "depth equivariance");
    }

    {
        Stream rng(82);
        double worst = 0;
        for (int rep = 0; rep < 200; ++rep) {
            const double m1 = rng.normal(0, 3), m2 = rng.normal(0, 3);
            const double v1 = 0.1 + 5 * rng.uniform(), v2 = 0.1 + 5 * rng.uniform();
            const auto p = product_of_normals(m1, v1, m2, v2);
            const double x = p.conditional.mean + 2 * std::sqrt(p.conditional.var) * rng.normal();
            const double lhs = testing_support::normal_pdf(x, m1, v1) * testing_support::normal_pdf(x, m2, v2);
            const double rhs = testing_support::normal_pdf(m1, p.marginal.mean, p.marginal.var) * testing_support::normal_pdf(x, p.conditional.mean, p.conditional.var);
            worst = std::max(worst, std::abs(rhs - lhs) / lhs);
        }
        check(worst < 1e-12, "product of normals identity");
    }

    std::string detail = failed.empty() ? "crps, fisher, auc, depth and product-of-normals checks all hold" : "failed:";
    for (const auto& f : failed) {
        detail += " " + f + ";";
    }
    return {failed.empty(), detail};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict reproducibility() {
    const auto dir = fs::temp_directory_path() / "bader_acceptance_repro";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto cli = [&](const std::string& args) {
        const std::string cmd = "cd '" + dir.string() + "' && '" + BADER_CLI + "' " + args + " >/dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    const char* files[] = {"summary.tsv", "depths.tsv", "removed.tsv", "draws.tsv"};
    int compared = 0;
    bool same = cli("simulate --design flat --m 300 --n 3 --seed 5 --out sim") && cli("simulate --design flat --m 100 --n 2 --model negbinom --seed 6 --out simnb");
    same = same && cli("fit --counts sim/counts.tsv --labels sim/labels.tsv --iters 1000 --burnin 500 --thin 5 --write-draws --threads 1 --out ln1");
    same = same && cli("--config ln1/manifest.json fit --threads 4 --out ln4");
    same = same && cli("--config ln1/manifest.json fit --out lnagain");
    same = same && cli("fit --counts simnb/counts.tsv --labels simnb/labels.tsv --model negbinom --fix-tau 0.8 --iters 600 --burnin 300 --thin 3 --write-draws --threads 1 --out nb1");
    same = same && cli("--config nb1/manifest.json fit --threads 3 --out nb3");
    for (auto [first, second] : {std::pair{"ln1", "ln4"}, {"ln1", "lnagain"}, {"nb1", "nb3"}}) {
        for (const char* f : files) {
            const auto a = slurp(dir / first / f);
            same = same && !a.empty() && a == slurp(dir / second / f);
            ++compared;
        }
    }
    fs::remove_all(dir);
    return {same, fmt("%d output files compared across reruns from the manifest at 1, 3 and 4 threads, %s", compared, same ? "all byte-identical" : "mismatch found")};
}

}

int main(int argc, char** argv) {
    const std::map<int, std::function<Verdict()>> criteria{
        {1, runtime}, {2, oracle_equivalence}, {3, calibration}, {4, de_detection}, {5, enrichment_detection},
        {6, coverage}, {7, sampler_comparison}, {8, estimator_suite}, {9, reproducibility},
    };
    std::vector<int> chosen;
    for (int a = 1; a < argc; ++a) {
        chosen.push_back(std::atoi(argv[a]));
    }
    if (chosen.empty()) {
        for (const auto& [k, _] : criteria) {
            chosen.push_back(k);
        }
    }
    int failures = 0;
    for (int k : chosen) {
        auto it = criteria.find(k);
        if (it == criteria.end()) {
            std::cerr << "unknown criterion " << k << '\n';
            return 2;
        }
        const auto start = Clock::now();
        Verdict v;
        try {
            v = it->second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        failures += !v.pass;
        std::cout << "criterion " << k << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << fmt("  [%.0f s]", seconds_since(start)) << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
