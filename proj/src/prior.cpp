#include "subsim/prior.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace subsim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double lognormal_logpdf(double x, double mu, double sigma) {
    if (!(x > 0.0)) return kNegInf;
    const double lx = std::log(x);
    const double z = (lx - mu) / sigma;
    return -kLogSqrt2Pi - std::log(sigma) - lx - 0.5 * z * z;
}

} // namespace

PriorSpec::PriorSpec(UniformBox box) : spec_(std::move(box)) {
    const auto& b = std::get<UniformBox>(spec_);
    if (b.lower.size() != b.upper.size() || b.lower.size() == 0)
        throw std::invalid_argument("UniformBox: bounds must be non-empty and equal-sized");
    for (Index k = 0; k < b.lower.size(); ++k)
        if (!(b.lower[k] < b.upper[k]))
            throw std::invalid_argument("UniformBox: lower must be < upper in every component");
    dim_ = b.lower.size();
}

PriorSpec::PriorSpec(LogNormalProduct lognormal) : spec_(std::move(lognormal)) {
    const auto& l = std::get<LogNormalProduct>(spec_);
    if (l.log_mean.size() != l.log_std.size() || l.log_mean.size() == 0)
        throw std::invalid_argument("LogNormalProduct: params must be non-empty and equal-sized");
    if (!(l.log_std.array() > 0.0).all())
        throw std::invalid_argument("LogNormalProduct: log_std must be positive");
    dim_ = l.log_mean.size();
}

PriorSpec::PriorSpec(Composite composite) : spec_(std::move(composite)) {
    const auto& c = std::get<Composite>(spec_);
    if (c.blocks.empty()) throw std::invalid_argument("Composite: needs at least one block");
    dim_ = 0;
    for (const auto& blk : c.blocks) dim_ += blk.dim();
}

PriorSpec PriorSpec::uniform_box(Vector lower, Vector upper) {
    return PriorSpec(UniformBox{std::move(lower), std::move(upper)});
}

PriorSpec PriorSpec::lognormal_product(Vector log_mean, Vector log_std) {
    return PriorSpec(LogNormalProduct{std::move(log_mean), std::move(log_std)});
}

PriorSpec PriorSpec::composite(std::vector<PriorSpec> blocks) {
    return PriorSpec(Composite{std::move(blocks)});
}

Vector PriorSpec::component_sd() const {
    Vector sd(dim_);
    if (const auto* b = std::get_if<UniformBox>(&spec_)) {
        sd = (b->upper - b->lower) / std::sqrt(12.0);
    } else if (const auto* l = std::get_if<LogNormalProduct>(&spec_)) {
        for (Index k = 0; k < dim_; ++k) {
            const double s2 = l->log_std[k] * l->log_std[k];
            sd[k] = std::exp(l->log_mean[k] + 0.5 * s2) * std::sqrt(std::expm1(s2));
        }
    } else {
        const auto& c = std::get<Composite>(spec_);
        Index off = 0;
        for (const auto& blk : c.blocks) {
            sd.segment(off, blk.dim()) = blk.component_sd();
            off += blk.dim();
        }
    }
    return sd;
}

bool PriorSpec::in_support(const ConstVectorRef& theta) const {
    return std::isfinite(prior_logpdf(*this, theta));
}

Vector prior_sample(const PriorSpec& prior, RngStream& rng) {
    Vector x(prior.dim());
    if (const auto* b = std::get_if<UniformBox>(&prior.spec())) {
        for (Index k = 0; k < x.size(); ++k) x[k] = rng.uniform(b->lower[k], b->upper[k]);
    } else if (const auto* l = std::get_if<LogNormalProduct>(&prior.spec())) {
        for (Index k = 0; k < x.size(); ++k)
            x[k] = std::exp(rng.normal(l->log_mean[k], l->log_std[k]));
    } else {
        const auto& c = std::get<Composite>(prior.spec());
        Index off = 0;
        for (const auto& blk : c.blocks) {
            x.segment(off, blk.dim()) = prior_sample(blk, rng);
            off += blk.dim();
        }
    }
    return x;
}

double prior_logpdf(const PriorSpec& prior, const ConstVectorRef& theta) {
    if (theta.size() != prior.dim())
        throw std::invalid_argument("prior_logpdf: dimension mismatch");
    double lp = 0.0;
    if (const auto* b = std::get_if<UniformBox>(&prior.spec())) {
        for (Index k = 0; k < theta.size(); ++k) {
            if (theta[k] < b->lower[k] || theta[k] > b->upper[k]) return kNegInf;
            lp -= std::log(b->upper[k] - b->lower[k]);
        }
    } else if (const auto* l = std::get_if<LogNormalProduct>(&prior.spec())) {
        for (Index k = 0; k < theta.size(); ++k) {
            lp += lognormal_logpdf(theta[k], l->log_mean[k], l->log_std[k]);
            if (lp == kNegInf) return kNegInf;
        }
    } else {
        const auto& c = std::get<Composite>(prior.spec());
        Index off = 0;
        for (const auto& blk : c.blocks) {
            lp += prior_logpdf(blk, theta.segment(off, blk.dim()));
            if (lp == kNegInf) return kNegInf;
            off += blk.dim();
        }
    }
    return lp;
}

double prior_component_logpdf(const PriorSpec& prior, Index k, double x) {
    if (k < 0 || k >= prior.dim())
        throw std::invalid_argument("prior_component_logpdf: component out of range");
    if (const auto* b = std::get_if<UniformBox>(&prior.spec())) {
        if (x < b->lower[k] || x > b->upper[k]) return kNegInf;
        return -std::log(b->upper[k] - b->lower[k]);
    }
    if (const auto* l = std::get_if<LogNormalProduct>(&prior.spec()))
        return lognormal_logpdf(x, l->log_mean[k], l->log_std[k]);
    const auto& c = std::get<Composite>(prior.spec());
    for (const auto& blk : c.blocks) {
        if (k < blk.dim()) return prior_component_logpdf(blk, k, x);
        k -= blk.dim();
    }
    throw std::logic_error("prior_component_logpdf: unreachable");
}

} // namespace subsim
