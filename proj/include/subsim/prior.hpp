#ifndef SUBSIM_PRIOR_HPP
#define SUBSIM_PRIOR_HPP

#include "subsim/rng.hpp"
#include "subsim/types.hpp"

#include <variant>
#include <vector>

namespace subsim {

/// Independent uniform prior on an axis-aligned box.
struct UniformBox {
    Vector lower;
    Vector upper;
};

/// Product of independent lognormal densities, parameterized on log scale.
struct LogNormalProduct {
    Vector log_mean;
    Vector log_std;
};

class PriorSpec;

/// Ordered blocks applied to disjoint consecutive parameter slices.
struct Composite {
    std::vector<PriorSpec> blocks;
};

/// Prior over a parameter vector. Construction validates the invariants
/// (box bounds ordered, log-stds positive, composite slices contiguous).
class PriorSpec {
public:
    PriorSpec(UniformBox box);              // NOLINT(google-explicit-constructor)
    PriorSpec(LogNormalProduct lognormal);  // NOLINT(google-explicit-constructor)
    PriorSpec(Composite composite);         // NOLINT(google-explicit-constructor)

    static PriorSpec uniform_box(Vector lower, Vector upper);
    static PriorSpec lognormal_product(Vector log_mean, Vector log_std);
    static PriorSpec composite(std::vector<PriorSpec> blocks);

    Index dim() const { return dim_; }

    const std::variant<UniformBox, LogNormalProduct, Composite>& spec() const { return spec_; }

    /// Per-component standard deviation (uniform: range/sqrt(12); lognormal: analytic).
    Vector component_sd() const;

    bool in_support(const ConstVectorRef& theta) const;

private:
    std::variant<UniformBox, LogNormalProduct, Composite> spec_;
    Index dim_ = 0;
};

/// Draws one vector distributed exactly as `prior`.
Vector prior_sample(const PriorSpec& prior, RngStream& rng);

/// Log-density at theta; -inf outside the support. Throws on dimension mismatch.
double prior_logpdf(const PriorSpec& prior, const ConstVectorRef& theta);

/// Log-density of the single component k at value x (the component-wise
/// factor used by the conditional-sampling acceptance rule).
double prior_component_logpdf(const PriorSpec& prior, Index k, double x);

} // namespace subsim

#endif
