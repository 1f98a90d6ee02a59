// Simulate a small data set, fit it, and print the genes most likely to be differentially expressed.

#include <algorithm>
#include <iostream>
#include <numeric>

#include "bader/bader.hpp"

int main() {
    bader::FlatDesign design;
    design.m = 300;
    design.n = 3;
    design.seed = 7;
    const auto sim = bader::simulate_flat(design);

    const auto filtered = bader::filter_low_counts(sim.counts, bader::FilterPolicy{});
    const auto depths = bader::estimate_depths(filtered.retained);

    bader::SamplerConfig config;
    config.n_iter = 4000;
    config.n_burnin = 2000;
    config.thin = 4;
    const auto draws = bader::run_chain(filtered.retained, depths, config);
    auto summary = bader::summarize(draws);

    std::sort(summary.begin(), summary.end(), [](const auto& a, const auto& b) { return a.p_de > b.p_de; });
    summary.resize(std::min<std::size_t>(summary.size(), 10));
    bader::write_summary(std::cout, summary);
}
