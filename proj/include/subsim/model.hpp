#ifndef SUBSIM_MODEL_HPP
#define SUBSIM_MODEL_HPP

#include "subsim/dataset.hpp"
#include "subsim/ground_motion.hpp"
#include "subsim/metric.hpp"
#include "subsim/prior.hpp"
#include "subsim/rng.hpp"
#include "subsim/types.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace subsim {

/// Thrown when a simulator produces a non-finite state.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, Index time_index)
        : std::runtime_error(what + " (time index " + std::to_string(time_index) + ")"),
          time_index_(time_index) {}

    Index time_index() const { return time_index_; }

private:
    Index time_index_;
};

/// Deterministic input-to-output map. Implementations are pure functions of
/// (theta, motion) and safe to call concurrently.
class ForwardSimulator {
public:
    virtual ~ForwardSimulator() = default;

    virtual Index n_params() const = 0;
    virtual Index n_channels() const = 0;

    /// Output series of length n_samples(motion) * n_channels, channel-major
    /// per time step. Throws SimulationError on divergence.
    virtual Vector response(const ConstVectorRef& theta, const GroundMotion& motion) const = 0;

    /// Dimension of the dynamic state vector for state-noise injection;
    /// 0 means state noise is unsupported.
    virtual Index state_dim() const { return 0; }

    /// Response with iid Gaussian noise (diagonal covariance q_diag) added to
    /// the state after each observation step.
    virtual Vector response_with_state_noise(const ConstVectorRef& /*theta*/,
                                             const GroundMotion& /*motion*/,
                                             const ConstVectorRef& /*q_diag*/,
                                             RngStream& /*rng*/) const {
        throw std::logic_error("state noise not supported by this simulator");
    }
};

enum class NuisanceMode { LaplaceMarginalized, FixedSigma };

/// Named forward simulator plus its parameter prior; the unit of model comparison.
class ModelClassSpec {
public:
    ModelClassSpec(std::string name, PriorSpec prior, std::shared_ptr<const ForwardSimulator> forward,
                   NuisanceMode nuisance_mode = NuisanceMode::LaplaceMarginalized,
                   double fixed_sigma = 0.0, std::optional<Vector> state_noise_diag = std::nullopt)
        : name_(std::move(name)), prior_(std::move(prior)), forward_(std::move(forward)),
          nuisance_mode_(nuisance_mode), fixed_sigma_(fixed_sigma),
          state_noise_diag_(std::move(state_noise_diag)) {
        if (!forward_) throw std::invalid_argument("ModelClassSpec: null simulator");
        if (prior_.dim() != forward_->n_params())
            throw std::invalid_argument("ModelClassSpec: prior dimension != simulator parameter count");
        if (state_noise_diag_) {
            if (nuisance_mode_ == NuisanceMode::LaplaceMarginalized)
                throw std::invalid_argument(
                    "ModelClassSpec: state noise requires FixedSigma nuisance handling");
            if (state_noise_diag_->size() != forward_->state_dim())
                throw std::invalid_argument("ModelClassSpec: state-noise diagonal size != state dim");
            if ((state_noise_diag_->array() < 0.0).any())
                throw std::invalid_argument("ModelClassSpec: state-noise variances must be >= 0");
        }
        if (nuisance_mode_ == NuisanceMode::FixedSigma && fixed_sigma_ < 0.0)
            throw std::invalid_argument("ModelClassSpec: fixed sigma must be >= 0");
    }

    const std::string& name() const { return name_; }
    Index n_params() const { return prior_.dim(); }
    const PriorSpec& prior() const { return prior_; }
    const ForwardSimulator& forward() const { return *forward_; }
    NuisanceMode nuisance_mode() const { return nuisance_mode_; }
    double fixed_sigma() const { return fixed_sigma_; }
    const std::optional<Vector>& state_noise_diag() const { return state_noise_diag_; }

private:
    std::string name_;
    PriorSpec prior_;
    std::shared_ptr<const ForwardSimulator> forward_;
    NuisanceMode nuisance_mode_;
    double fixed_sigma_;
    std::optional<Vector> state_noise_diag_;
};

/// One joint draw of (theta, output) with its cached metric value and the
/// output-error variance used for the draw.
struct HierarchicalSample {
    Vector theta;
    Vector states;   // empty unless a simulator exposes them
    Vector output;
    double discrepancy = 0.0;
    double sigma2 = 0.0;
};

/// Samples the hierarchical forward model at theta: deterministic response,
/// optional state-noise propagation, then output noise with variance
/// sigma_v^2 (FixedSigma) or the profiled variance (LaplaceMarginalized).
/// `suppress_noise` is a test hook that forces v = 0.
HierarchicalSample forward_draw(const ModelClassSpec& model, const ConstVectorRef& theta,
                                const Dataset& data, Norm norm, RngStream& rng,
                                bool suppress_noise = false);

} // namespace subsim

#endif
