#ifndef SUBSIM_EVIDENCE_HPP
#define SUBSIM_EVIDENCE_HPP

#include "subsim/sampler.hpp"

#include <string>
#include <vector>

namespace subsim {

struct EvidencePoint {
    double epsilon = 0.0;
    double prob = 0.0;          // P(D(epsilon)) estimate
    double log_evidence = 0.0;  // ln prob - ln V(epsilon); NaN when dim unknown
};

/// Tolerance-to-probability curve read off a run; points sorted by
/// descending epsilon, probabilities in (0, 1] and non-increasing.
struct EvidenceCurve {
    std::vector<EvidencePoint> points;
};

/// Log-volume of the norm ball of radius epsilon in dimension dim.
double log_ball_volume(double epsilon, Index dim, Norm norm);

/// Linear-space volume; overflows for large dim, prefer the log form.
double ball_volume(double epsilon, Index dim, Norm norm);

/// Probability curve from the per-level sorted discrepancies: sample i at
/// level j contributes (eps^{i,(j)}, p0^{j-1} (N_t - i)/N_t). Duplicate
/// epsilons collapse to the smaller probability. When with_volume_dim > 0
/// the log-evidence column is filled using the run's norm.
EvidenceCurve prob_curve(const SubSimRun& run, Index with_volume_dim = 0);

/// Evidence estimate at a tolerance: locates the level bracketing
/// eps_target, takes the fraction of its samples inside, and divides by the
/// ball volume (in log space). Throws std::out_of_range below the smallest
/// attained discrepancy (no extrapolation).
double evidence_at(const SubSimRun& run, double eps_target, Index norm_dim);

/// Probability of the data-approximating region at eps_target (the
/// numerator of the evidence estimate).
double prob_at(const SubSimRun& run, double eps_target);

/// Softmax of log_evidence + log_prior with max subtraction.
Vector model_posteriors(const Vector& log_evidences, const Vector& log_priors);

struct ModelComparisonEntry {
    std::string name;
    double final_tolerance = 0.0;
    Index n_levels = 0;
    double log_evidence = 0.0;
    double posterior_prob = 0.0;
};

/// Per-model evidence at each model's own final tolerance plus posterior
/// probabilities on a shared epsilon grid.
struct ModelComparisonReport {
    std::vector<ModelComparisonEntry> models;
    Vector eps_grid;          // descending
    Matrix posterior_vs_eps;  // one row per grid point, NaN rows where skipped
    std::vector<std::string> warnings;
};

/// Columnwise model posteriors over a descending epsilon grid. Grid points
/// not covered by every run are reported in warnings and left NaN.
ModelComparisonReport compare_models(const std::vector<SubSimRun>& runs, const Vector& log_priors,
                                     const Vector& eps_grid);

} // namespace subsim

#endif
