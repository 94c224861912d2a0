#include "subsim/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

namespace subsim {

namespace {

constexpr std::uint64_t kTagInitDraw = 1;
constexpr std::uint64_t kTagChain = 2;

template <class Body>
void parallel_for(Index n, int n_threads, Body&& body) {
    if (n_threads <= 1 || n < 2) {
        for (Index i = 0; i < n; ++i) body(i);
        return;
    }
    const int t = static_cast<int>(std::min<Index>(n_threads, n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(t));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < t; ++w) {
        const Index begin = n * w / t;
        const Index end = n * (w + 1) / t;
        pool.emplace_back([&, begin, end] {
            try {
                for (Index i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

void sort_level(LevelRecord& level) {
    const auto n = static_cast<Index>(level.samples.size());
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return level.samples[static_cast<std::size_t>(a)].discrepancy >
               level.samples[static_cast<std::size_t>(b)].discrepancy;
    });
    std::vector<HierarchicalSample> sorted;
    std::vector<Index> ids;
    sorted.reserve(static_cast<std::size_t>(n));
    ids.reserve(static_cast<std::size_t>(n));
    for (Index i : order) {
        sorted.push_back(std::move(level.samples[static_cast<std::size_t>(i)]));
        ids.push_back(level.chain_id[static_cast<std::size_t>(i)]);
    }
    level.samples = std::move(sorted);
    level.chain_id = std::move(ids);
}

std::vector<double> discrepancies_of(const LevelRecord& level) {
    std::vector<double> d;
    d.reserve(level.samples.size());
    for (const auto& s : level.samples) d.push_back(s.discrepancy);
    return d;
}

void drop_heavy_fields(HierarchicalSample& s) {
    s.output.resize(0);
    s.states.resize(0);
}

} // namespace

std::vector<std::string> SubSimConfig::validate() const {
    if (n_per_level < 2) throw std::invalid_argument("SubSimConfig: n_per_level must be >= 2");
    if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("SubSimConfig: p0 must lie in (0,1)");
    const double chains = p0 * static_cast<double>(n_per_level);
    if (std::abs(chains - std::round(chains)) > 1e-9 || std::round(chains) < 1.0)
        throw std::invalid_argument("SubSimConfig: p0 * n_per_level must be a positive integer");
    const double len = 1.0 / p0;
    if (std::abs(len - std::round(len)) > 1e-9 || std::round(len) < 2.0)
        throw std::invalid_argument("SubSimConfig: 1/p0 must be an integer >= 2");
    if (!(target_accept > 0.0 && target_accept < 1.0))
        throw std::invalid_argument("SubSimConfig: target_accept must lie in (0,1)");
    if (!(adapt_prob > 0.0 && adapt_prob <= 1.0))
        throw std::invalid_argument("SubSimConfig: adapt_prob must lie in (0,1]");
    if (max_levels < 1) throw std::invalid_argument("SubSimConfig: max_levels must be >= 1");
    if (n_threads < 1) throw std::invalid_argument("SubSimConfig: n_threads must be >= 1");
    if (eps_target && !(*eps_target > 0.0))
        throw std::invalid_argument("SubSimConfig: eps_target must be > 0");

    std::vector<std::string> warnings;
    if (p0 < 0.1 || p0 > 0.3)
        warnings.push_back("p0 = " + std::to_string(p0) + " lies outside the recommended [0.1, 0.3]");
    return warnings;
}

const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::EpsTarget: return "eps_target";
        case StopReason::AcceptanceCollapse: return "acceptance_collapse";
        default: return "max_levels";
    }
}

RejectionResult abc_rejection(const ModelClassSpec& model, const Dataset& data,
                              const DataRegion& region, Index n_samples, RngStream& rng,
                              Index max_trials) {
    if (max_trials <= 0) max_trials = 10000 * n_samples;
    RejectionResult out;
    out.samples.reserve(static_cast<std::size_t>(n_samples));
    while (static_cast<Index>(out.samples.size()) < n_samples) {
        if (out.trials >= max_trials)
            throw TrialBudgetExhausted(static_cast<Index>(out.samples.size()), out.trials);
        ++out.trials;
        const Vector theta = prior_sample(model.prior(), rng);
        try {
            HierarchicalSample s = forward_draw(model, theta, data, region.norm, rng);
            if (s.discrepancy <= region.epsilon) out.samples.push_back(std::move(s));
        } catch (const SimulationError&) {
            // a diverged draw cannot land in the region
        }
    }
    return out;
}

ModelChoiceResult abc_model_choice_baseline(const std::vector<ModelClassSpec>& models,
                                            const Dataset& data, const DataRegion& region,
                                            Index n_samples, RngStream& rng,
                                            const Vector& model_priors, Index max_trials) {
    const auto n_models = static_cast<Index>(models.size());
    if (n_models == 0) throw std::invalid_argument("abc_model_choice_baseline: no models");
    Vector priors = model_priors.size() == 0
                        ? Vector::Constant(n_models, 1.0 / static_cast<double>(n_models))
                        : model_priors;
    if (priors.size() != n_models || (priors.array() < 0.0).any())
        throw std::invalid_argument("abc_model_choice_baseline: bad model priors");
    priors /= priors.sum();

    if (max_trials <= 0) max_trials = 10000 * n_samples;
    ModelChoiceResult out;
    out.counts.assign(static_cast<std::size_t>(n_models), 0);
    Index accepted = 0;
    while (accepted < n_samples) {
        if (out.trials >= max_trials) throw TrialBudgetExhausted(accepted, out.trials);
        ++out.trials;
        const double u = rng.uniform01();
        Index pick = n_models - 1;
        double cum = 0.0;
        for (Index l = 0; l < n_models; ++l) {
            cum += priors[l];
            if (u < cum) {
                pick = l;
                break;
            }
        }
        const auto& model = models[static_cast<std::size_t>(pick)];
        const Vector theta = prior_sample(model.prior(), rng);
        try {
            const HierarchicalSample s = forward_draw(model, theta, data, region.norm, rng);
            if (s.discrepancy <= region.epsilon) {
                ++accepted;
                ++out.counts[static_cast<std::size_t>(pick)];
            }
        } catch (const SimulationError&) {
        }
    }
    out.frequencies.resize(n_models);
    for (Index l = 0; l < n_models; ++l)
        out.frequencies[l] =
            static_cast<double>(out.counts[static_cast<std::size_t>(l)]) / static_cast<double>(n_samples);
    return out;
}

double select_tolerance(const std::vector<double>& sorted_desc, double p0) {
    const auto n = static_cast<Index>(sorted_desc.size());
    const double cut = static_cast<double>(n) * (1.0 - p0);
    const auto i = static_cast<Index>(std::llround(cut));
    if (std::abs(cut - static_cast<double>(i)) > 1e-9 || i < 1 || i >= n)
        throw std::invalid_argument("select_tolerance: n * p0 must be a positive integer < n");
    return 0.5 * (sorted_desc[static_cast<std::size_t>(i - 1)] +
                  sorted_desc[static_cast<std::size_t>(i)]);
}

LevelRecord init_level(const ModelClassSpec& model, const Dataset& data, const SubSimConfig& config,
                       Index* simulator_calls) {
    const Index n = config.n_per_level;
    LevelRecord level;
    level.level_index = 1;
    level.samples.resize(static_cast<std::size_t>(n));
    level.chain_id.resize(static_cast<std::size_t>(n));
    level.mean_accept = 1.0;
    level.proposal_scales = 0.1 * model.prior().component_sd();

    std::vector<Index> calls(static_cast<std::size_t>(n), 0);
    std::vector<signed char> failed(static_cast<std::size_t>(n), 0);
    parallel_for(n, config.n_threads, [&](Index i) {
        RngStream rng(config.master_seed, kTagInitDraw, 1, static_cast<std::uint64_t>(i));
        bool ok = false;
        for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
            const Vector theta = prior_sample(model.prior(), rng);
            try {
                ++calls[static_cast<std::size_t>(i)];
                HierarchicalSample s = forward_draw(model, theta, data, config.norm, rng);
                if (!config.store_outputs) drop_heavy_fields(s);
                level.samples[static_cast<std::size_t>(i)] = std::move(s);
                ok = true;
            } catch (const SimulationError&) {
            }
        }
        if (!ok) failed[static_cast<std::size_t>(i)] = 1;
        level.chain_id[static_cast<std::size_t>(i)] = i;
    });
    for (Index i = 0; i < n; ++i)
        if (failed[static_cast<std::size_t>(i)])
            throw SimulationError("init_level: prior draw kept diverging", i);
    if (simulator_calls)
        *simulator_calls += std::accumulate(calls.begin(), calls.end(), Index{0});

    sort_level(level);
    level.tolerance = select_tolerance(discrepancies_of(level), config.p0);
    return level;
}

MmaResult mma_step(const HierarchicalSample& current, const ModelClassSpec& model,
                   const Dataset& data, const DataRegion& region, const ConstVectorRef& scales,
                   RngStream& rng, const std::function<double(double)>& log_weight) {
    const PriorSpec& prior = model.prior();
    Vector candidate = current.theta;
    bool moved = false;
    for (Index k = 0; k < candidate.size(); ++k) {
        const double prop = current.theta[k] + scales[k] * rng.normal();
        const double delta =
            prior_component_logpdf(prior, k, prop) - prior_component_logpdf(prior, k, current.theta[k]);
        bool take = delta >= 0.0;
        if (!take && std::isfinite(delta)) take = rng.uniform01() < std::exp(delta);
        if (take) {
            candidate[k] = prop;
            moved = true;
        }
    }
    if (!moved) return {current, false, false};

    HierarchicalSample next;
    try {
        next = forward_draw(model, candidate, data, region.norm, rng);
    } catch (const SimulationError&) {
        return {current, false, true};
    }
    if (next.discrepancy > region.epsilon) return {current, false, true};
    if (log_weight) {
        const double dw = log_weight(next.sigma2) - log_weight(current.sigma2);
        if (dw < 0.0 && rng.uniform01() >= std::exp(dw)) return {current, false, true};
    }
    return {std::move(next), true, true};
}

Vector self_regulate(const Vector& scales, double mean_accept, const SubSimConfig& config,
                     const Vector& prior_sd) {
    const double factor = std::exp(mean_accept - config.target_accept);
    Vector out = scales * factor;
    for (Index k = 0; k < out.size(); ++k)
        out[k] = std::clamp(out[k], 1e-8 * prior_sd[k], 1e2 * prior_sd[k]);
    return out;
}

LevelRecord run_level(const std::vector<HierarchicalSample>& seeds, const ModelClassSpec& model,
                      const Dataset& data, const SubSimConfig& config, double eps_prev,
                      Index level_index, Vector& scales, const Vector& prior_sd,
                      Index* simulator_calls) {
    const Index n = config.n_per_level;
    const auto n_chains = static_cast<Index>(seeds.size());
    const auto chain_len = static_cast<Index>(std::llround(1.0 / config.p0));
    if (n_chains * chain_len != n)
        throw std::invalid_argument("run_level: seeds * chain length != n_per_level");
    const DataRegion region(config.norm, eps_prev);

    LevelRecord level;
    level.level_index = level_index;
    level.samples.resize(static_cast<std::size_t>(n));
    level.chain_id.resize(static_cast<std::size_t>(n));

    std::vector<Index> accepts(static_cast<std::size_t>(n_chains), 0);
    std::vector<Index> calls(static_cast<std::size_t>(n_chains), 0);

    const auto batch =
        std::max<Index>(1, static_cast<Index>(std::llround(config.adapt_prob *
                                                           static_cast<double>(n_chains))));
    for (Index b0 = 0; b0 < n_chains; b0 += batch) {
        const Index b1 = std::min(n_chains, b0 + batch);
        const Vector batch_scales = scales; // frozen while the batch runs
        parallel_for(b1 - b0, config.n_threads, [&](Index off) {
            const Index chain = b0 + off;
            RngStream rng(config.master_seed, kTagChain, static_cast<std::uint64_t>(level_index),
                          static_cast<std::uint64_t>(chain));
            HierarchicalSample cur = seeds[static_cast<std::size_t>(chain)];
            const Index slot = chain * chain_len;
            level.samples[static_cast<std::size_t>(slot)] = cur;
            level.chain_id[static_cast<std::size_t>(slot)] = chain;
            for (Index s = 1; s < chain_len; ++s) {
                MmaResult res = mma_step(cur, model, data, region, batch_scales, rng,
                                         config.log_nuisance_weight);
                accepts[static_cast<std::size_t>(chain)] += res.accepted ? 1 : 0;
                calls[static_cast<std::size_t>(chain)] += res.simulated ? 1 : 0;
                cur = std::move(res.next);
                if (!config.store_outputs) drop_heavy_fields(cur);
                level.samples[static_cast<std::size_t>(slot + s)] = cur;
                level.chain_id[static_cast<std::size_t>(slot + s)] = chain;
            }
        });
        Index batch_accepts = 0;
        for (Index c = b0; c < b1; ++c) batch_accepts += accepts[static_cast<std::size_t>(c)];
        const double batch_steps = static_cast<double>((b1 - b0) * (chain_len - 1));
        scales = self_regulate(scales, static_cast<double>(batch_accepts) / batch_steps, config,
                               prior_sd);
    }

    Index total_accepts = 0, total_calls = 0;
    for (Index c = 0; c < n_chains; ++c) {
        total_accepts += accepts[static_cast<std::size_t>(c)];
        total_calls += calls[static_cast<std::size_t>(c)];
    }
    if (simulator_calls) *simulator_calls += total_calls;
    level.mean_accept =
        static_cast<double>(total_accepts) / static_cast<double>(n_chains * (chain_len - 1));
    level.proposal_scales = scales;

    sort_level(level);
    level.tolerance = select_tolerance(discrepancies_of(level), config.p0);
    return level;
}

std::optional<StopReason> should_stop(const SubSimRun& run, const SubSimConfig& config) {
    if (run.levels.empty()) return std::nullopt;
    const LevelRecord& last = run.levels.back();
    if (config.eps_target && last.tolerance <= *config.eps_target) return StopReason::EpsTarget;
    if (last.level_index >= 2 && last.mean_accept < 0.1 * config.target_accept)
        return StopReason::AcceptanceCollapse;
    if (static_cast<Index>(run.levels.size()) >= config.max_levels) return StopReason::MaxLevels;
    return std::nullopt;
}

SubSimRun run_abc_subsim(const ModelClassSpec& model, const Dataset& data,
                         const SubSimConfig& config,
                         const std::function<void(const SubSimRun&)>& on_level) {
    config.validate();
    SubSimRun run;
    run.model_name = model.name();
    run.config = config;
    run.dataset_digest = data.digest();
    run.n_obs = data.observed.size();

    const Vector prior_sd = model.prior().component_sd();
    Vector scales = 0.1 * prior_sd;

    run.levels.push_back(init_level(model, data, config, &run.total_simulator_calls));
    if (on_level) on_level(run);

    const auto n_seeds = static_cast<Index>(std::llround(config.p0 * config.n_per_level));
    while (true) {
        if (const auto stop = should_stop(run, config)) {
            run.stop_reason = *stop;
            break;
        }
        const LevelRecord& prev = run.levels.back();
        std::vector<HierarchicalSample> seeds(
            prev.samples.end() - static_cast<std::ptrdiff_t>(n_seeds), prev.samples.end());
        LevelRecord level =
            run_level(seeds, model, data, config, prev.tolerance,
                      static_cast<Index>(run.levels.size()) + 1, scales, prior_sd,
                      &run.total_simulator_calls);
        if (!(level.tolerance < prev.tolerance)) {
            // stagnated percentile (e.g. all-equal discrepancies): no progress possible
            run.stop_reason = StopReason::AcceptanceCollapse;
            break;
        }
        scales = self_regulate(scales, level.mean_accept, config, prior_sd);
        run.levels.push_back(std::move(level));
        if (on_level) on_level(run);
    }
    return run;
}

} // namespace subsim
