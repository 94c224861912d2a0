#ifndef SUBSIM_TESTS_SUPPORT_HPP
#define SUBSIM_TESTS_SUPPORT_HPP

#include "subsim/rng.hpp"
#include "subsim/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace testsup {

using subsim::Index;
using subsim::Vector;

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double lognormal_cdf(double x, double mu, double sigma) {
    return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - mu) / sigma);
}

inline double uniform_cdf(double x, double lo, double hi) {
    return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

/// One-sample Kolmogorov-Smirnov statistic against an analytic CDF.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

/// Two-sample KS statistic.
inline double ks_statistic2(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(a.size()) -
                                 static_cast<double>(j) / static_cast<double>(b.size())));
    }
    return d;
}

/// KS critical value at significance alpha (asymptotic), one-sample.
inline double ks_critical(double alpha, std::size_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

inline double ks_critical2(double alpha, std::size_t n, std::size_t m) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) *
           std::sqrt(static_cast<double>(n + m) / static_cast<double>(n * m));
}

/// Truncated-normal moments on [a, b] for N(mu, sd^2).
struct TruncNormal {
    double mean = 0.0;
    double sd = 0.0;
};

inline TruncNormal truncated_normal_moments(double mu, double sd, double a, double b) {
    const double alpha = (a - mu) / sd, beta = (b - mu) / sd;
    const auto phi = [](double x) {
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    };
    const double z = normal_cdf(beta) - normal_cdf(alpha);
    const double m = mu + sd * (phi(alpha) - phi(beta)) / z;
    const double v =
        sd * sd *
        (1.0 + (alpha * phi(alpha) - beta * phi(beta)) / z -
         std::pow((phi(alpha) - phi(beta)) / z, 2));
    return {m, std::sqrt(v)};
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace testsup

#endif
