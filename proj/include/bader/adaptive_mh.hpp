#ifndef BADER_ADAPTIVE_MH_HPP
#define BADER_ADAPTIVE_MH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "distributions.hpp"
#include "rng.hpp"

/**
 * @file adaptive_mh.hpp
 * @brief Adaptive random-walk Metropolis-Hastings proposals in the style of Haario et al. (2001),
 * plus a joint proposal for a binary indicator and its dependent continuous parameters.
 */

namespace bader {

/**
 * Tuning shared by all proposals of one parameter family.
 */
struct ProposalSettings {
    /// Standard deviation of each coordinate before adaptation starts.
    double initial_sd = 0.1;

    /// Number of recorded states before the history covariance replaces the fixed proposal.
    std::size_t adapt_start = 100;

    /// Added to the diagonal of the proposal covariance so it stays positive definite.
    double jitter = 1e-6;

    /// Multiplier of the history covariance; a non-positive value selects 2.4^2 / dim.
    double scale = 0;

    double scale_for(std::size_t dim) const { return scale > 0 ? scale : 2.4 * 2.4 / static_cast<double>(dim); }
};

/**
 * @brief Running-covariance random-walk proposal for a block of `Dim` parameters.
 *
 * The history mean and covariance are updated with Welford's recursion every time `record()` is called.
 * Once `adapt_start` states have been recorded, proposals are drawn from N(current, scale * history_cov + jitter * I);
 * before that, from N(current, initial_sd^2 * I).
 */
template<std::size_t Dim>
class AdaptiveProposal {
public:
    static_assert(Dim >= 1);
    using Vector = std::array<double, Dim>;
    using Matrix = std::array<std::array<double, Dim>, Dim>;

    AdaptiveProposal() = default;

    void record(const Vector& x) {
        ++my_count;
        const double n = static_cast<double>(my_count);
        Vector delta;
        for (std::size_t a = 0; a < Dim; ++a) {
            delta[a] = x[a] - my_mean[a];
            my_mean[a] += delta[a] / n;
        }
        for (std::size_t a = 0; a < Dim; ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
                my_m2[a][b] += delta[a] * (x[b] - my_mean[b]);
            }
        }
    }

    std::size_t count() const { return my_count; }
    const Vector& history_mean() const { return my_mean; }

    /// Sample covariance of the recorded history (zero with fewer than two records).
    Matrix history_cov() const {
        Matrix out{};
        if (my_count < 2) {
            return out;
        }
        const double denom = static_cast<double>(my_count - 1);
        for (std::size_t a = 0; a < Dim; ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
                out[a][b] = my_m2[a][b] / denom;
                out[b][a] = out[a][b];
            }
        }
        return out;
    }

    bool adapted(const ProposalSettings& settings) const { return my_count >= settings.adapt_start; }

    Matrix proposal_cov(const ProposalSettings& settings) const {
        Matrix out{};
        if (!adapted(settings)) {
            for (std::size_t a = 0; a < Dim; ++a) {
                out[a][a] = settings.initial_sd * settings.initial_sd;
            }
            return out;
        }
        out = history_cov();
        const double s = settings.scale_for(Dim);
        for (std::size_t a = 0; a < Dim; ++a) {
            for (std::size_t b = 0; b < Dim; ++b) {
                out[a][b] *= s;
            }
            out[a][a] += settings.jitter;
        }
        return out;
    }

    Vector propose(const Vector& current, const ProposalSettings& settings, Stream& rng) const {
        for (auto c : current) {
            if (!std::isfinite(c)) {
                throw std::logic_error("non-finite state passed to an adaptive proposal");
            }
        }
        if constexpr (Dim == 1) {
            const double var = proposal_cov(settings)[0][0];
            return Vector{current[0] + std::sqrt(var) * rng.normal()};
        } else {
            const auto chol = cholesky(proposal_cov(settings));
            Vector z;
            for (auto& v : z) {
                v = rng.normal();
            }
            Vector out = current;
            for (std::size_t a = 0; a < Dim; ++a) {
                for (std::size_t b = 0; b <= a; ++b) {
                    out[a] += chol[a][b] * z[b];
                }
            }
            return out;
        }
    }

    /// Log density of the proposal distribution centred at `center`, evaluated at `x`.
    double log_density(const Vector& x, const Vector& center, const ProposalSettings& settings) const {
        const auto chol = cholesky(proposal_cov(settings));
        // Solve L y = (x - center) by forward substitution.
        Vector y{};
        double log_det = 0;
        for (std::size_t a = 0; a < Dim; ++a) {
            double v = x[a] - center[a];
            for (std::size_t b = 0; b < a; ++b) {
                v -= chol[a][b] * y[b];
            }
            y[a] = v / chol[a][a];
            log_det += std::log(chol[a][a]);
        }
        double quad = 0;
        for (auto v : y) {
            quad += v * v;
        }
        return -0.5 * (static_cast<double>(Dim) * log_two_pi + quad) - log_det;
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    static Matrix cholesky(const Matrix& m) {
        Matrix l{};
        for (std::size_t a = 0; a < Dim; ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
                double sum = m[a][b];
                for (std::size_t c = 0; c < b; ++c) {
                    sum -= l[a][c] * l[b][c];
                }
                if (a == b) {
                    // A zero diagonal only arises from a zero pre-adaptation step, which proposes the centre itself.
                    if (!(sum >= 0)) {
                        throw std::logic_error("proposal covariance is not positive semi-definite");
                    }
                    l[a][a] = std::sqrt(sum);
                } else {
                    l[a][b] = l[b][b] > 0 ? sum / l[b][b] : 0;
                }
            }
        }
        return l;
    }

private:
    std::size_t my_count = 0;
    Vector my_mean{};
    Matrix my_m2{};
};

/**
 * Metropolis-Hastings acceptance for a symmetric proposal (or with any proposal correction already folded into `log_target_proposed`).
 * A proposed log density of -infinity is always rejected.
 */
inline bool accept(double log_target_current, double log_target_proposed, Stream& rng) {
    if (std::isnan(log_target_current) || std::isnan(log_target_proposed)) {
        throw std::logic_error("NaN log density in Metropolis-Hastings step");
    }
    if (log_target_proposed == -std::numeric_limits<double>::infinity()) {
        return false;
    }
    const double log_ratio = log_target_proposed - log_target_current;
    if (log_ratio >= 0) {
        return true;
    }
    return std::log(rng.uniform()) < log_ratio;
}

/**
 * A point of the mixed discrete/continuous space: when `indicator` is false, `effect` is exactly zero.
 */
struct MixedPoint {
    bool indicator = false;
    double effect = 0;
    double location = 0;
};

/**
 * Where a proposal that switches the binary component is centred.
 */
enum class SwitchCenter {
    /// The running history mean of the target branch.
    history_mean,
    /// The last value visited in the target branch.
    last_value
};

/**
 * @brief Joint proposal for an indicator and the continuous parameters whose dimension it controls.
 *
 * The indicator is proposed as Bernoulli with the running mean of past indicators, clamped to [eps, 1 - eps].
 * Given indicator 0, `effect` is 0 and `location` is drawn from a one-dimensional adaptive normal;
 * given indicator 1, (effect, location) is drawn from a two-dimensional adaptive normal.
 * When the proposed indicator matches the current one, the normal is centred at the current point.
 * Otherwise it is centred according to `SwitchCenter`.
 * Each branch keeps its own history, recorded only while the chain sits in that branch,
 * together with the last value visited there.
 *
 * The proposal is not symmetric across branches, so callers must add `log_proposal_ratio()` to the acceptance ratio.
 */
class DiscreteMixedProposal {
public:
    struct Settings {
        ProposalSettings branch0{0.1, 100, 1e-6, 0};
        ProposalSettings branch1{0.1, 100, 1e-6, 0};
        double clamp = 0.01;
        SwitchCenter center = SwitchCenter::history_mean;
        /// Use this indicator rate (unclamped) instead of the running mean.
        std::optional<double> fixed_rate;
    };

    DiscreteMixedProposal() = default;

    /// Record one starting value in each branch so both can be proposed from the first iteration.
    void seed(double location0, double effect1, double location1) {
        my_branch0.record({location0});
        my_branch1.record({effect1, location1});
        my_last0 = location0;
        my_last1 = {effect1, location1};
    }

    double bernoulli_rate(const Settings& settings) const {
        if (settings.fixed_rate) {
            return *settings.fixed_rate;
        }
        double rate = my_trials ? static_cast<double>(my_ones) / static_cast<double>(my_trials) : 0.5;
        return std::clamp(rate, settings.clamp, 1 - settings.clamp);
    }

    MixedPoint propose(const MixedPoint& current, const Settings& settings, Stream& rng) const {
        MixedPoint out;
        out.indicator = rng.bernoulli(bernoulli_rate(settings));
        if (!out.indicator) {
            const double center = out.indicator == current.indicator ? current.location : switch_center0(settings);
            out.location = my_branch0.propose({center}, settings.branch0, rng)[0];
            out.effect = 0;
        } else {
            const auto center = out.indicator == current.indicator ? AdaptiveProposal<2>::Vector{current.effect, current.location} : switch_center1(settings);
            auto draw = my_branch1.propose(center, settings.branch1, rng);
            out.effect = draw[0];
            out.location = draw[1];
        }
        return out;
    }

    /**
     * log q(current | proposed) - log q(proposed | current), where the reverse move is evaluated with the
     * bookkeeping it would see after accepting `proposed`.
     */
    double log_proposal_ratio(const MixedPoint& current, const MixedPoint& proposed, const Settings& settings) const {
        if (current.indicator == proposed.indicator) {
            return 0;
        }
        const double rate = bernoulli_rate(settings);
        auto log_bern = [&](bool b) { return std::log(b ? rate : 1 - rate); };

        double forward = log_bern(proposed.indicator);
        double reverse = log_bern(current.indicator);
        if (proposed.indicator) {
            forward += my_branch1.log_density({proposed.effect, proposed.location}, switch_center1(settings), settings.branch1);
            // After the switch the current point is the last value in branch 0.
            const double back = settings.center == SwitchCenter::last_value ? current.location : switch_center0(settings);
            reverse += my_branch0.log_density({current.location}, {back}, settings.branch0);
        } else {
            forward += my_branch0.log_density({proposed.location}, {switch_center0(settings)}, settings.branch0);
            const auto back = settings.center == SwitchCenter::last_value ? AdaptiveProposal<2>::Vector{current.effect, current.location} : switch_center1(settings);
            reverse += my_branch1.log_density({current.effect, current.location}, back, settings.branch1);
        }
        return reverse - forward;
    }

    /// Update the indicator rate and the history of the branch the chain is now in.
    void record(const MixedPoint& state) {
        ++my_trials;
        if (state.indicator) {
            ++my_ones;
            my_branch1.record({state.effect, state.location});
            my_last1 = {state.effect, state.location};
        } else {
            my_branch0.record({state.location});
            my_last0 = state.location;
        }
    }

    const AdaptiveProposal<1>& branch0() const { return my_branch0; }
    const AdaptiveProposal<2>& branch1() const { return my_branch1; }
    double last_location0() const { return my_last0; }
    const AdaptiveProposal<2>::Vector& last_value1() const { return my_last1; }

private:
    double switch_center0(const Settings& settings) const {
        return settings.center == SwitchCenter::last_value ? my_last0 : my_branch0.history_mean()[0];
    }
    AdaptiveProposal<2>::Vector switch_center1(const Settings& settings) const {
        return settings.center == SwitchCenter::last_value ? my_last1 : my_branch1.history_mean();
    }

    AdaptiveProposal<1> my_branch0;
    AdaptiveProposal<2> my_branch1;
    double my_last0 = 0;
    AdaptiveProposal<2>::Vector my_last1{};
    std::size_t my_ones = 0;
    std::size_t my_trials = 0;
};

}

#endif
