#ifndef SUBSIM_SAMPLER_HPP
#define SUBSIM_SAMPLER_HPP

#include "subsim/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace subsim {

/// Tuning knobs of a subset-simulation run. p0 * n_per_level and 1/p0 must
/// be integers; p0 outside [0.1, 0.3] is legal but warned against.
struct SubSimConfig {
    Index n_per_level = 2000;
    double p0 = 0.2;
    double target_accept = 0.5;
    double adapt_prob = 0.1;
    Index max_levels = 12;
    std::optional<double> eps_target;
    std::uint64_t master_seed = 0;
    Norm norm = Norm::L2;
    int n_threads = 1;
    bool store_outputs = false;

    /// Optional reweighting of the conditional target by a function of the
    /// profiled output-error variance (exercises the insensitivity of the
    /// marginalized posterior to the variance prior). Null = no weighting.
    /// The tag names the weighting in manifests and run files; the function
    /// itself is never persisted.
    std::function<double(double)> log_nuisance_weight;
    std::string nuisance_weight_tag;

    /// Throws on hard violations; returns human-readable warnings.
    std::vector<std::string> validate() const;
};

enum class StopReason { EpsTarget, AcceptanceCollapse, MaxLevels };

const char* stop_reason_name(StopReason r);

/// One simulation level: tolerance, the N_t samples sorted by descending
/// discrepancy, chain provenance, and the adaptation state.
struct LevelRecord {
    Index level_index = 1; // 1-based; level 1 holds the iid prior stage
    double tolerance = 0.0;
    std::vector<HierarchicalSample> samples;
    std::vector<Index> chain_id; // parallel to samples; the draw index at level 1
    double mean_accept = 1.0;
    Vector proposal_scales;
};

struct SubSimRun {
    std::string model_name;
    SubSimConfig config;
    std::vector<LevelRecord> levels;
    StopReason stop_reason = StopReason::MaxLevels;
    std::uint64_t dataset_digest = 0;
    Index n_obs = 0; // observed-vector dimension N * N_o
    Index total_simulator_calls = 0;
};

/// Result of the plain rejection baseline.
struct RejectionResult {
    std::vector<HierarchicalSample> samples;
    Index trials = 0;
    double acceptance_rate() const {
        return trials == 0 ? 0.0 : static_cast<double>(samples.size()) / static_cast<double>(trials);
    }
};

/// Thrown when the rejection baselines exhaust their trial budget; carries
/// the acceptance-rate estimate observed so far.
class TrialBudgetExhausted : public std::runtime_error {
public:
    TrialBudgetExhausted(Index accepted, Index trials)
        : std::runtime_error("ABC rejection: trial budget exhausted (" + std::to_string(accepted) +
                             "/" + std::to_string(trials) + " accepted)"),
          accepted_(accepted), trials_(trials) {}
    double acceptance_rate_estimate() const {
        return trials_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(trials_);
    }

private:
    Index accepted_;
    Index trials_;
};

/// Plain ABC rejection: J independent accepted draws, plus the trial count.
RejectionResult abc_rejection(const ModelClassSpec& model, const Dataset& data,
                              const DataRegion& region, Index n_samples, RngStream& rng,
                              Index max_trials = 0); // 0 = 10^4 * n_samples

struct ModelChoiceResult {
    Vector frequencies; // acceptance frequency per model
    std::vector<Index> counts;
    Index trials = 0;
};

/// Joint model-index rejection baseline; estimates posterior model
/// probabilities as acceptance frequencies under a shared tolerance.
ModelChoiceResult abc_model_choice_baseline(const std::vector<ModelClassSpec>& models,
                                            const Dataset& data, const DataRegion& region,
                                            Index n_samples, RngStream& rng,
                                            const Vector& model_priors = Vector(),
                                            Index max_trials = 0);

/// Midpoint of the two order statistics bracketing the 100*p0 percentile of
/// a descending discrepancy sequence.
double select_tolerance(const std::vector<double>& sorted_desc, double p0);

/// Level 1: iid draws from the hierarchical prior, sorted, tolerance set so
/// the tail fraction is exactly p0.
LevelRecord init_level(const ModelClassSpec& model, const Dataset& data, const SubSimConfig& config,
                       Index* simulator_calls = nullptr);

struct MmaResult {
    HierarchicalSample next;
    bool accepted = false;
    bool simulated = false;
};

/// One step of the component-wise conditional sampler: per-component
/// symmetric Gaussian proposals accepted on prior ratios, then a single
/// forward simulation and the region indicator. A simulator failure counts
/// as a rejection.
MmaResult mma_step(const HierarchicalSample& current, const ModelClassSpec& model,
                   const Dataset& data, const DataRegion& region, const ConstVectorRef& scales,
                   RngStream& rng, const std::function<double(double)>& log_weight = nullptr);

/// Grows each seed chain to length 1/p0 under the level's region, adapting
/// the proposal scales after every adapt_prob fraction of chains.
LevelRecord run_level(const std::vector<HierarchicalSample>& seeds, const ModelClassSpec& model,
                      const Dataset& data, const SubSimConfig& config, double eps_prev,
                      Index level_index, Vector& scales, const Vector& prior_sd,
                      Index* simulator_calls = nullptr);

/// Multiplicative feedback driving the mean acceptance toward the target;
/// clamped to [1e-8, 1e2] times the prior scale.
Vector self_regulate(const Vector& scales, double mean_accept, const SubSimConfig& config,
                     const Vector& prior_sd);

/// Stop when the tolerance target is met, the acceptance rate collapses
/// below a tenth of the target, or the level budget is used up.
std::optional<StopReason> should_stop(const SubSimRun& run, const SubSimConfig& config);

/// The full multi-level sampler. Deterministic for a fixed master seed,
/// independent of n_threads. `on_level` (optional) fires after each level.
SubSimRun run_abc_subsim(const ModelClassSpec& model, const Dataset& data,
                         const SubSimConfig& config,
                         const std::function<void(const SubSimRun&)>& on_level = nullptr);

} // namespace subsim

#endif
