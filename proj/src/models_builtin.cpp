#include "subsim/models_builtin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace subsim {

ParamMap::ParamMap(std::vector<std::string> canonical, const std::map<std::string, double>& fixed,
                   const std::vector<std::string>& free_order,
                   const std::map<std::string, std::string>& aliases)
    : canonical_(std::move(canonical)), free_names_(free_order) {
    fixed_values_.assign(canonical_.size(), 0.0);
    free_index_.assign(canonical_.size(), -1);

    auto free_pos = [&](const std::string& name) -> Index {
        const auto it = std::find(free_names_.begin(), free_names_.end(), name);
        return it == free_names_.end() ? -1 : static_cast<Index>(it - free_names_.begin());
    };

    std::vector<bool> free_used(free_names_.size(), false);
    for (std::size_t s = 0; s < canonical_.size(); ++s) {
        const std::string& name = canonical_[s];
        const auto fx = fixed.find(name);
        Index fi = free_pos(name);
        if (fi < 0) {
            const auto al = aliases.find(name);
            if (al != aliases.end()) {
                fi = free_pos(al->second);
                if (fi < 0)
                    throw std::invalid_argument("ParamMap: alias target '" + al->second +
                                                "' is not a free parameter");
            }
        }
        if ((fx != fixed.end()) == (fi >= 0))
            throw std::invalid_argument("ParamMap: parameter '" + name +
                                        "' must be either fixed or free (exactly one)");
        if (fi >= 0) {
            free_index_[s] = fi;
            free_used[static_cast<std::size_t>(fi)] = true;
        } else {
            fixed_values_[s] = fx->second;
        }
    }
    for (std::size_t i = 0; i < free_names_.size(); ++i)
        if (!free_used[i])
            throw std::invalid_argument("ParamMap: free parameter '" + free_names_[i] +
                                        "' binds to nothing");
    for (const auto& [name, value] : fixed)
        if (std::find(canonical_.begin(), canonical_.end(), name) == canonical_.end())
            throw std::invalid_argument("ParamMap: unknown fixed parameter '" + name + "'");
}

Vector ParamMap::assemble(const ConstVectorRef& theta) const {
    if (theta.size() != n_free()) throw std::invalid_argument("ParamMap: theta size mismatch");
    Vector out(static_cast<Index>(canonical_.size()));
    for (std::size_t s = 0; s < canonical_.size(); ++s)
        out[static_cast<Index>(s)] =
            free_index_[s] >= 0 ? theta[free_index_[s]] : fixed_values_[s];
    return out;
}

const std::vector<std::string>& BilinearSimulator::canonical() {
    static const std::vector<std::string> names{"m", "c", "k1", "k2", "z_y"};
    return names;
}

BilinearParams BilinearSimulator::params_at(const ConstVectorRef& theta) const {
    const Vector v = map_.assemble(theta);
    BilinearParams p;
    p.m = v[0];
    p.c = v[1];
    p.k1 = v[2];
    p.k2 = v[3];
    p.z_y = v[4];
    return p;
}

Vector BilinearSimulator::response(const ConstVectorRef& theta, const GroundMotion& motion) const {
    return simulate_bilinear(params_at(theta), motion, -1.0, substeps_);
}

Vector BilinearSimulator::response_with_state_noise(const ConstVectorRef& theta,
                                                    const GroundMotion& motion,
                                                    const ConstVectorRef& q_diag,
                                                    RngStream& rng) const {
    return simulate_bilinear_state_noise(params_at(theta), motion, q_diag, rng, substeps_);
}

const std::vector<std::string>& MasingSimulator::canonical() {
    static const std::vector<std::string> names{"k1",     "k2",     "k3",     "ru1", "ru2", "ru3",
                                                "alpha1", "alpha2", "alpha3", "c_m", "c_k"};
    return names;
}

MasingParams MasingSimulator::params_at(const ConstVectorRef& theta) const {
    const Vector v = map_.assemble(theta);
    MasingParams p;
    p.masses = masses_;
    p.k = v.segment(0, 3);
    p.r_u = v.segment(3, 3);
    p.alpha = v.segment(6, 3);
    p.c_m = v[9];
    p.c_k = v[10];
    return p;
}

Vector MasingSimulator::response(const ConstVectorRef& theta, const GroundMotion& motion) const {
    return simulate_masing(params_at(theta), motion, -1.0, substeps_);
}

BilinearParams bilinear_reference_params() {
    BilinearParams p;
    p.m = 1.0;
    p.c = 0.02;
    p.k1 = 1.0;
    p.k2 = 0.1;
    p.z_y = 0.02; // 2 cm
    return p;
}

MasingParams masing_reference_params() {
    MasingParams p;
    p.masses = Vector::Constant(3, 1.25e5);
    p.k = Vector::Constant(3, 2.5e8);
    p.r_u = Vector::Constant(3, 1.75e6);
    p.alpha = Vector::Constant(3, 4.0);
    p.c_m = 0.293;
    p.c_k = 2.64e-4;
    return p;
}

ModelClassSpec bilinear_model_class(int variant) {
    std::map<std::string, double> fixed{{"m", 1.0}};
    std::vector<std::string> free_order;
    std::map<std::string, std::string> aliases;
    std::vector<PriorSpec> blocks;

    const auto unif = [](double lo, double hi) {
        return PriorSpec::uniform_box(Vector::Constant(1, lo), Vector::Constant(1, hi));
    };

    switch (variant) {
        case 1: // linear oscillator: force k1*z realized by k2 = k1, yield out of reach
            free_order = {"k1", "c"};
            aliases = {{"k2", "k1"}};
            fixed["z_y"] = 1e9;
            blocks = {unif(0.0, 2.0), unif(0.0, 0.5)};
            break;
        case 2: // elastoplastic, no viscous damping
            free_order = {"k1", "z_y"};
            fixed["c"] = 0.0;
            fixed["k2"] = 0.0;
            blocks = {unif(0.0, 2.0), unif(0.0, 0.1)};
            break;
        case 3: // bilinear, no viscous damping
            free_order = {"k1", "k2", "z_y"};
            fixed["c"] = 0.0;
            blocks = {unif(0.0, 2.0), unif(0.0, 0.5), unif(0.0, 0.1)};
            break;
        default:
            throw std::invalid_argument("bilinear_model_class: variant must be 1..3");
    }

    auto sim = std::make_shared<BilinearSimulator>(
        ParamMap(BilinearSimulator::canonical(), fixed, free_order, aliases));
    return ModelClassSpec("M" + std::to_string(variant),
                          PriorSpec::composite(std::move(blocks)), std::move(sim));
}

ModelClassSpec masing_model_class(int variant) {
    if (variant < 1 || variant > 4)
        throw std::invalid_argument("masing_model_class: variant must be 1..4");
    const bool damped = variant == 2 || variant == 4;
    const bool per_story_alpha = variant == 3 || variant == 4;

    std::map<std::string, double> fixed;
    std::map<std::string, std::string> aliases;
    std::vector<std::string> free_order{"k1", "k2", "k3", "ru1", "ru2", "ru3", "alpha1"};
    if (per_story_alpha) {
        free_order.push_back("alpha2");
        free_order.push_back("alpha3");
    } else {
        aliases = {{"alpha2", "alpha1"}, {"alpha3", "alpha1"}};
    }
    if (damped) {
        free_order.push_back("c_m");
        free_order.push_back("c_k");
    } else {
        fixed["c_m"] = 0.0;
        fixed["c_k"] = 0.0;
    }

    const Index n_log = per_story_alpha ? 9 : 7;
    Vector log_mean(n_log), log_std = Vector::Constant(n_log, 0.5);
    log_mean.segment(0, 3).setConstant(std::log(2.5e8));
    log_mean.segment(3, 3).setConstant(std::log(2.5e6));
    log_mean.segment(6, n_log - 6).setConstant(std::log(4.0));

    std::vector<PriorSpec> blocks;
    blocks.push_back(PriorSpec::lognormal_product(log_mean, log_std));
    if (damped) {
        Vector lo = Vector::Zero(2), hi(2);
        hi << 1.5, 1.5e-3;
        blocks.push_back(PriorSpec::uniform_box(lo, hi));
    }

    auto sim = std::make_shared<MasingSimulator>(
        Vector::Constant(3, 1.25e5),
        ParamMap(MasingSimulator::canonical(), fixed, free_order, aliases));
    return ModelClassSpec("M" + std::to_string(variant),
                          PriorSpec::composite(std::move(blocks)), std::move(sim));
}

ModelClassSpec toy_model_class(double theta_lo, double theta_hi, double sigma) {
    return ModelClassSpec("toy",
                          PriorSpec::uniform_box(Vector::Constant(1, theta_lo),
                                                 Vector::Constant(1, theta_hi)),
                          std::make_shared<ToySimulator>(), NuisanceMode::FixedSigma, sigma);
}

} // namespace subsim
