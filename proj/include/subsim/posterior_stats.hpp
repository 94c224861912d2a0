#ifndef SUBSIM_POSTERIOR_STATS_HPP
#define SUBSIM_POSTERIOR_STATS_HPP

#include "subsim/sampler.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace subsim {

/// Per-parameter posterior summary computed from the final level's samples.
struct ParamSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double lognormal_map = 0.0; // exp(mu - s^2) of a lognormal fit; NaN if any sample <= 0
    double lognormal_sd = 0.0;  // sd of the fitted lognormal; NaN likewise
};

inline std::vector<ParamSummary> summarize_posterior(const SubSimRun& run,
                                                     const std::vector<std::string>& names) {
    if (run.levels.empty() || run.levels.back().samples.empty())
        throw std::invalid_argument("summarize_posterior: empty run");
    const auto& samples = run.levels.back().samples;
    const Index n_params = samples.front().theta.size();
    const auto n = static_cast<double>(samples.size());

    std::vector<ParamSummary> out;
    for (Index k = 0; k < n_params; ++k) {
        ParamSummary s;
        s.name = k < static_cast<Index>(names.size()) ? names[static_cast<std::size_t>(k)]
                                                      : "theta_" + std::to_string(k);
        double sum = 0.0, sum2 = 0.0, lsum = 0.0, lsum2 = 0.0;
        bool all_positive = true;
        for (const auto& h : samples) {
            const double v = h.theta[k];
            sum += v;
            sum2 += v * v;
            if (v > 0.0) {
                const double lv = std::log(v);
                lsum += lv;
                lsum2 += lv * lv;
            } else {
                all_positive = false;
            }
        }
        s.mean = sum / n;
        s.sd = std::sqrt(std::max(0.0, sum2 / n - s.mean * s.mean));
        if (all_positive) {
            const double mu = lsum / n;
            const double var = std::max(0.0, lsum2 / n - mu * mu);
            s.lognormal_map = std::exp(mu - var);
            s.lognormal_sd = std::exp(mu + 0.5 * var) * std::sqrt(std::expm1(var));
        } else {
            s.lognormal_map = std::numeric_limits<double>::quiet_NaN();
            s.lognormal_sd = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// Posterior sample mean of sqrt(sigma2) over the final level.
inline double mean_sigma_v(const SubSimRun& run) {
    const auto& samples = run.levels.back().samples;
    double sum = 0.0;
    for (const auto& h : samples) sum += std::sqrt(h.sigma2);
    return sum / static_cast<double>(samples.size());
}

} // namespace subsim

#endif
