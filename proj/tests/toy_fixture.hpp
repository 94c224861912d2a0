#ifndef SUBSIM_TESTS_TOY_FIXTURE_HPP
#define SUBSIM_TESTS_TOY_FIXTURE_HPP

#include "subsim/io.hpp"
#include "subsim/models_builtin.hpp"
#include "subsim/sampler.hpp"

#include "support.hpp"

#include <cmath>

namespace testsup {

using namespace subsim;

/// Conjugate 1-D fixture: y = theta * u + N(0, sigma^2 I), uniform prior on
/// theta. The exact posterior as the tolerance vanishes is the truncated
/// normal with m = u.z / |u|^2 and v = sigma^2 / |u|^2.
struct ToyProblem {
    ModelClassSpec model;
    Dataset data;
    double theta_true;
    double sigma;
    double post_mean;  // truncated-normal moments on the prior box
    double post_sd;
    double gauss_mean; // untruncated
    double gauss_sd;
    double lo, hi;

    static ToyProblem make(Index n_obs = 100, double theta_true = 1.1, double sigma = 0.5,
                           double lo = 0.0, double hi = 2.0, std::uint64_t seed = 2024) {
        Vector u(n_obs);
        RngStream urng(seed, 0xF00D, 0, 0);
        for (Index i = 0; i < n_obs; ++i)
            u[i] = std::sin(0.37 * static_cast<double>(i)) + 0.4 * urng.normal();
        GroundMotion motion(0.01, std::move(u));
        return finish(std::move(motion), theta_true, sigma, lo, hi, seed);
    }

    /// Wide-box variant: the rare event is dominated by parameter rarity, so
    /// the sampler reaches P(D(eps)) ~ 1e-4 with healthy acceptance.
    static ToyProblem make_wide(std::uint64_t seed = 2024) {
        return make(100, 1.1, 0.5, -49.0, 51.0, seed);
    }

    /// Short-data variant for the vanishing-tolerance evidence limit: with
    /// two observations the tolerance can shrink below the noise scale
    /// before the fresh-noise acceptance collapses.
    static ToyProblem make_short(std::uint64_t seed = 2024) {
        Vector u(2);
        u << 1.0, -0.8;
        GroundMotion motion(0.01, std::move(u));
        return finish(std::move(motion), 1.1, 0.5, -49.0, 51.0, seed);
    }

    static ToyProblem finish(GroundMotion motion, double theta_true, double sigma, double lo,
                             double hi, std::uint64_t seed) {

        ModelClassSpec model = toy_model_class(lo, hi, sigma);
        const Index n_obs = motion.n_samples();
        // observations: theta_true * u + iid noise at exactly sigma
        Vector obs = theta_true * motion.accel;
        RngStream nrng(seed, 0xBEEF, 0, 0);
        for (Index i = 0; i < n_obs; ++i) obs[i] += sigma * nrng.normal();
        Dataset data(motion, std::move(obs), 1);

        const double uu = motion.accel.squaredNorm();
        const double m = motion.accel.dot(data.observed) / uu;
        const double sd = sigma / std::sqrt(uu);
        const TruncNormal tn = truncated_normal_moments(m, sd, lo, hi);

        return ToyProblem{std::move(model), std::move(data), theta_true, sigma,
                          tn.mean,          tn.sd,           m,          sd,
                          lo,               hi};
    }

    /// Monte Carlo estimate of P(D(eps)) under the hierarchical prior.
    double prob_region_mc(double eps, Index n_draws, std::uint64_t seed = 7) const {
        RngStream rng(seed, 0xCAFE, 0, 0);
        Index hits = 0;
        const Vector& u = data.input.accel;
        for (Index d = 0; d < n_draws; ++d) {
            const double theta = rng.uniform(lo, hi);
            double ss = 0.0;
            for (Index i = 0; i < u.size(); ++i) {
                const double y = theta * u[i] + sigma * rng.normal();
                const double e = y - data.observed[i];
                ss += e * e;
            }
            if (std::sqrt(ss) <= eps) ++hits;
        }
        return static_cast<double>(hits) / static_cast<double>(n_draws);
    }

    /// Exact log-evidence in the vanishing-tolerance limit: the Gaussian
    /// marginal likelihood integrated over the uniform prior box.
    double analytic_log_evidence() const {
        const Vector& u = data.input.accel;
        const Vector& z = data.observed;
        const double n = static_cast<double>(z.size());
        const double uu = u.squaredNorm();
        const double m = u.dot(z) / uu;
        const double v = sigma * sigma / uu;
        const double ss0 = z.squaredNorm() - m * m * uu; // residual at the LS fit
        const double log_like_peak =
            -0.5 * n * std::log(2.0 * std::numbers::pi * sigma * sigma) -
            0.5 * ss0 / (sigma * sigma);
        const double z_lo = (lo - m) / std::sqrt(v), z_hi = (hi - m) / std::sqrt(v);
        const double mass = normal_cdf(z_hi) - normal_cdf(z_lo);
        return log_like_peak + 0.5 * std::log(2.0 * std::numbers::pi * v) + std::log(mass) -
               std::log(hi - lo);
    }
};

} // namespace testsup

#endif
