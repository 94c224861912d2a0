#include "subsim/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace subsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double level_fraction_within(const LevelRecord& level, double eps) {
    // samples sorted by descending discrepancy: count the tail <= eps
    const auto& s = level.samples;
    const auto it = std::partition_point(s.begin(), s.end(),
                                         [eps](const HierarchicalSample& h) { return h.discrepancy > eps; });
    return static_cast<double>(s.end() - it) / static_cast<double>(s.size());
}

} // namespace

double log_ball_volume(double epsilon, Index dim, Norm norm) {
    if (!(epsilon > 0.0) || dim < 1)
        throw std::invalid_argument("log_ball_volume: need epsilon > 0 and dim >= 1");
    const double d = static_cast<double>(dim);
    if (norm == Norm::Linf) return d * std::log(2.0 * epsilon);
    return 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0) + d * std::log(epsilon);
}

double ball_volume(double epsilon, Index dim, Norm norm) {
    return std::exp(log_ball_volume(epsilon, dim, norm));
}

EvidenceCurve prob_curve(const SubSimRun& run, Index with_volume_dim) {
    if (run.levels.empty()) throw std::invalid_argument("prob_curve: run has no levels");
    const auto n_t = static_cast<double>(run.config.n_per_level);
    const double p0 = run.config.p0;
    const auto n_keep_mid =
        static_cast<Index>(std::llround(n_t * (1.0 - p0))); // deeper levels refine the tail

    EvidenceCurve curve;
    const auto n_levels = static_cast<Index>(run.levels.size());
    for (Index j = 0; j < n_levels; ++j) {
        const LevelRecord& level = run.levels[static_cast<std::size_t>(j)];
        const double level_scale = std::pow(p0, static_cast<double>(j));
        const Index i_max = (j + 1 < n_levels)
                                ? n_keep_mid
                                : static_cast<Index>(level.samples.size()) - 1;
        for (Index i = 1; i <= i_max; ++i) {
            EvidencePoint pt;
            pt.epsilon = level.samples[static_cast<std::size_t>(i - 1)].discrepancy;
            pt.prob = level_scale * (n_t - static_cast<double>(i)) / n_t;
            pt.log_evidence = kNaN;
            if (pt.prob > 0.0) curve.points.push_back(pt);
        }
    }

    // collapse duplicate epsilons, keep the smaller probability
    std::vector<EvidencePoint> out;
    out.reserve(curve.points.size());
    for (const auto& pt : curve.points) {
        if (!out.empty() && out.back().epsilon == pt.epsilon)
            out.back().prob = std::min(out.back().prob, pt.prob);
        else
            out.push_back(pt);
    }
    curve.points = std::move(out);

    if (with_volume_dim > 0)
        for (auto& pt : curve.points)
            pt.log_evidence =
                std::log(pt.prob) - log_ball_volume(pt.epsilon, with_volume_dim, run.config.norm);
    return curve;
}

double prob_at(const SubSimRun& run, double eps_target) {
    if (run.levels.empty()) throw std::invalid_argument("prob_at: run has no levels");
    if (!(eps_target > 0.0)) throw std::invalid_argument("prob_at: eps_target must be > 0");

    // first level whose tolerance is <= eps_target brackets it from below
    const auto n_levels = static_cast<Index>(run.levels.size());
    Index use = n_levels - 1;
    bool bracketed = false;
    for (Index j = 0; j < n_levels; ++j) {
        if (run.levels[static_cast<std::size_t>(j)].tolerance <= eps_target) {
            use = j;
            bracketed = true;
            break;
        }
    }
    const LevelRecord& level = run.levels[static_cast<std::size_t>(use)];
    const double frac = level_fraction_within(level, eps_target);
    if (!bracketed && frac == 0.0)
        throw std::out_of_range("prob_at: eps_target below the smallest attained discrepancy");
    return std::pow(run.config.p0, static_cast<double>(use)) * frac;
}

double evidence_at(const SubSimRun& run, double eps_target, Index norm_dim) {
    const double p = prob_at(run, eps_target);
    return std::log(p) - log_ball_volume(eps_target, norm_dim, run.config.norm);
}

Vector model_posteriors(const Vector& log_evidences, const Vector& log_priors) {
    if (log_evidences.size() != log_priors.size() || log_evidences.size() == 0)
        throw std::invalid_argument("model_posteriors: length mismatch");
    Vector score = log_evidences + log_priors;
    const double top = score.maxCoeff();
    if (!std::isfinite(top)) throw std::invalid_argument("model_posteriors: no finite evidence");
    const Vector w = (score.array() - top).exp();
    return w / w.sum();
}

ModelComparisonReport compare_models(const std::vector<SubSimRun>& runs, const Vector& log_priors,
                                     const Vector& eps_grid) {
    const auto n_models = static_cast<Index>(runs.size());
    if (n_models == 0) throw std::invalid_argument("compare_models: no runs");
    if (log_priors.size() != n_models)
        throw std::invalid_argument("compare_models: prior/run count mismatch");
    for (const auto& run : runs) {
        if (run.dataset_digest != runs.front().dataset_digest)
            throw std::invalid_argument("compare_models: runs observe different datasets");
        if (run.config.norm != runs.front().config.norm)
            throw std::invalid_argument("compare_models: runs use different norms");
        if (run.n_obs != runs.front().n_obs)
            throw std::invalid_argument("compare_models: runs disagree on data dimension");
    }
    const Index dim = runs.front().n_obs;

    ModelComparisonReport report;
    Vector log_ev(n_models);
    for (Index l = 0; l < n_models; ++l) {
        const SubSimRun& run = runs[static_cast<std::size_t>(l)];
        ModelComparisonEntry e;
        e.name = run.model_name;
        e.final_tolerance = run.levels.back().tolerance;
        e.n_levels = static_cast<Index>(run.levels.size());
        e.log_evidence = evidence_at(run, e.final_tolerance, dim);
        log_ev[l] = e.log_evidence;
        report.models.push_back(std::move(e));
    }
    const Vector post = model_posteriors(log_ev, log_priors);
    for (Index l = 0; l < n_models; ++l)
        report.models[static_cast<std::size_t>(l)].posterior_prob = post[l];

    report.eps_grid = eps_grid;
    report.posterior_vs_eps = Matrix::Constant(eps_grid.size(), n_models, kNaN);
    for (Index g = 0; g < eps_grid.size(); ++g) {
        Vector ev(n_models);
        bool ok = true;
        for (Index l = 0; l < n_models; ++l) {
            try {
                ev[l] = evidence_at(runs[static_cast<std::size_t>(l)], eps_grid[g], dim);
            } catch (const std::exception& err) {
                report.warnings.push_back("eps = " + std::to_string(eps_grid[g]) + ", model " +
                                          runs[static_cast<std::size_t>(l)].model_name + ": " +
                                          err.what());
                ok = false;
                break;
            }
        }
        if (ok) report.posterior_vs_eps.row(g) = model_posteriors(ev, log_priors).transpose();
    }
    return report;
}

} // namespace subsim
