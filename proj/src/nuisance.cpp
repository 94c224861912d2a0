#include "subsim/nuisance.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace subsim {

double sigma2_mle(const ConstVectorRef& z_hat, const ConstVectorRef& g) {
    if (z_hat.size() != g.size() || z_hat.size() == 0)
        throw std::invalid_argument("sigma2_mle: length mismatch");
    return (z_hat - g).squaredNorm() / static_cast<double>(z_hat.size());
}

double hessian_nuisance(double sigma2, Index n_steps, Index n_channels) {
    if (!(sigma2 > 0.0))
        throw std::invalid_argument("hessian_nuisance: sigma2 must be > 0 (perfect fit is degenerate)");
    const double d = static_cast<double>(n_steps) * static_cast<double>(n_channels);
    return 0.5 * d / (sigma2 * sigma2);
}

double gaussian_loglik(const ConstVectorRef& z_hat, const ConstVectorRef& g, double s2) {
    const double d = static_cast<double>(z_hat.size());
    const double ss = (z_hat - g).squaredNorm();
    return -0.5 * d * std::log(2.0 * std::numbers::pi * s2) - 0.5 * ss / s2;
}

double laplace_log_marginal(const ConstVectorRef& z_hat, const ConstVectorRef& g,
                            double prior_at_mle) {
    const double s2 = sigma2_mle(z_hat, g);
    if (!(s2 > 0.0)) throw std::invalid_argument("laplace_log_marginal: zero MLE variance");
    const double h = hessian_nuisance(s2, z_hat.size(), 1);
    return 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(h) + std::log(prior_at_mle) +
           gaussian_loglik(z_hat, g, s2);
}

NuisanceReport nuisance_report(const ConstVectorRef& z_hat, const ConstVectorRef& g,
                               double prior_at_mle) {
    NuisanceReport r;
    r.sigma2_mle = sigma2_mle(z_hat, g);
    r.hessian = hessian_nuisance(r.sigma2_mle, z_hat.size(), 1);
    r.laplace_log_marginal = laplace_log_marginal(z_hat, g, prior_at_mle);
    return r;
}

Vector augmented_output_draw(const ConstVectorRef& z_hat, const ConstVectorRef& g,
                             RngStream& rng) {
    const double s2 = sigma2_mle(z_hat, g);
    Vector y = g;
    if (s2 > 0.0) {
        const double sd = std::sqrt(s2);
        for (Index i = 0; i < y.size(); ++i) y[i] += sd * rng.normal();
    }
    return y;
}

} // namespace subsim
