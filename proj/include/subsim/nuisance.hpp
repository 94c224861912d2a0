#ifndef SUBSIM_NUISANCE_HPP
#define SUBSIM_NUISANCE_HPP

#include "subsim/rng.hpp"
#include "subsim/types.hpp"

namespace subsim {

/// Laplace elimination of the output prediction-error variance.
/// For a Gaussian output error with isotropic variance s2 and residual
/// vector of length d = N*No, the profiled variance is ||z - g||^2 / d and
/// the curvature of the profiled log-likelihood is d / (2 s2^2).
struct NuisanceReport {
    double sigma2_mle = 0.0;
    double hessian = 0.0;
    double laplace_log_marginal = 0.0;
};

/// Maximum-likelihood output-error variance: mean squared residual.
double sigma2_mle(const ConstVectorRef& z_hat, const ConstVectorRef& g);

/// Curvature of the log-likelihood in the variance at its maximizer.
/// Throws when sigma2 is zero (perfect fit, degenerate).
double hessian_nuisance(double sigma2, Index n_steps, Index n_channels);

/// Log of the Laplace approximation to the variance-marginalized likelihood,
/// sqrt(2*pi) * H^{-1/2} * prior_at_mle * L(sigma2_mle).
double laplace_log_marginal(const ConstVectorRef& z_hat, const ConstVectorRef& g,
                            double prior_at_mle);

NuisanceReport nuisance_report(const ConstVectorRef& z_hat, const ConstVectorRef& g,
                               double prior_at_mle);

/// Gaussian log-likelihood of z_hat given mean g and isotropic variance s2.
double gaussian_loglik(const ConstVectorRef& z_hat, const ConstVectorRef& g, double s2);

/// Draws y = g + v with v iid N(0, sigma2_hat I), sigma2_hat profiled from
/// (z_hat, g). A zero residual returns g itself.
Vector augmented_output_draw(const ConstVectorRef& z_hat, const ConstVectorRef& g, RngStream& rng);

} // namespace subsim

#endif
