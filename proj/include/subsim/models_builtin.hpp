#ifndef SUBSIM_MODELS_BUILTIN_HPP
#define SUBSIM_MODELS_BUILTIN_HPP

#include "subsim/bilinear.hpp"
#include "subsim/masing.hpp"
#include "subsim/model.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace subsim {

/// Maps a free-parameter vector onto a simulator's canonical parameter list.
/// Every canonical name must be covered exactly once: by a fixed value, by a
/// free parameter, or by an alias onto a free parameter (shared parameters).
class ParamMap {
public:
    ParamMap(std::vector<std::string> canonical, const std::map<std::string, double>& fixed,
             const std::vector<std::string>& free_order,
             const std::map<std::string, std::string>& aliases = {});

    Index n_free() const { return static_cast<Index>(free_names_.size()); }
    const std::vector<std::string>& free_names() const { return free_names_; }
    const std::vector<std::string>& canonical_names() const { return canonical_; }

    /// Canonical parameter values for a free vector theta.
    Vector assemble(const ConstVectorRef& theta) const;

private:
    std::vector<std::string> canonical_;
    std::vector<std::string> free_names_;
    std::vector<double> fixed_values_; // per canonical slot, used when index < 0
    std::vector<Index> free_index_;    // per canonical slot, -1 when fixed
};

/// 1-D linear map y_n = theta * u_n; the conjugate toy used by the oracle
/// tests and tutorials.
class ToySimulator final : public ForwardSimulator {
public:
    Index n_params() const override { return 1; }
    Index n_channels() const override { return 1; }
    Vector response(const ConstVectorRef& theta, const GroundMotion& motion) const override {
        return theta[0] * motion.accel;
    }
};

/// Bilinear hysteretic SDOF behind the generic simulator interface.
/// Canonical parameters: m, c, k1, k2, z_y.
class BilinearSimulator final : public ForwardSimulator {
public:
    BilinearSimulator(ParamMap map, int substeps = 20)
        : map_(std::move(map)), substeps_(substeps) {}

    static const std::vector<std::string>& canonical();

    Index n_params() const override { return map_.n_free(); }
    Index n_channels() const override { return 1; }
    Index state_dim() const override { return 2; } // displacement, velocity

    Vector response(const ConstVectorRef& theta, const GroundMotion& motion) const override;
    Vector response_with_state_noise(const ConstVectorRef& theta, const GroundMotion& motion,
                                     const ConstVectorRef& q_diag, RngStream& rng) const override;

    BilinearParams params_at(const ConstVectorRef& theta) const;

private:
    ParamMap map_;
    int substeps_;
};

/// Three-story extended-Masing shear building. Canonical parameters:
/// k1,k2,k3, ru1,ru2,ru3, alpha1,alpha2,alpha3, c_m, c_k (masses fixed).
class MasingSimulator final : public ForwardSimulator {
public:
    MasingSimulator(Vector masses, ParamMap map, int substeps = 20)
        : masses_(std::move(masses)), map_(std::move(map)), substeps_(substeps) {}

    static const std::vector<std::string>& canonical();

    Index n_params() const override { return map_.n_free(); }
    Index n_channels() const override { return masses_.size(); }

    Vector response(const ConstVectorRef& theta, const GroundMotion& motion) const override;

    MasingParams params_at(const ConstVectorRef& theta) const;

private:
    Vector masses_;
    ParamMap map_;
    int substeps_;
};

/// Actual parameter values behind the two worked systems.
BilinearParams bilinear_reference_params();
MasingParams masing_reference_params();

/// Candidate model classes for the SDOF oscillator study: variant 1 = linear
/// (k1, c), 2 = elastoplastic (k1, z_y), 3 = bilinear (k1, k2, z_y).
ModelClassSpec bilinear_model_class(int variant);

/// Candidate model classes for the shear-building study: variants 1..4 with
/// shared/per-story alpha and with/without Rayleigh damping.
ModelClassSpec masing_model_class(int variant);

/// The conjugate toy as a model class with known output-error sigma.
ModelClassSpec toy_model_class(double theta_lo, double theta_hi, double sigma);

} // namespace subsim

#endif
