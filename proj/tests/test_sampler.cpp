#include "subsim/io.hpp"
#include "subsim/models_builtin.hpp"
#include "subsim/sampler.hpp"

#include "support.hpp"
#include "toy_fixture.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace subsim;
using testsup::ToyProblem;

namespace {

SubSimConfig toy_config(std::uint64_t seed = 42) {
    SubSimConfig c;
    c.n_per_level = 2000;
    c.p0 = 0.2;
    c.target_accept = 0.5;
    c.adapt_prob = 0.1;
    c.max_levels = 12;
    c.master_seed = seed;
    return c;
}

/// Constant-output map: always reproduces the observed vector, so the
/// region indicator never rejects.
class EchoSimulator final : public ForwardSimulator {
public:
    explicit EchoSimulator(Vector out) : out_(std::move(out)) {}
    Index n_params() const override { return 1; }
    Index n_channels() const override { return 1; }
    Vector response(const ConstVectorRef&, const GroundMotion&) const override { return out_; }

private:
    Vector out_;
};

} // namespace

TEST_CASE("select_tolerance: percentile midpoints") {
    CHECK(select_tolerance({5, 4, 3, 2, 1}, 0.2) == doctest::Approx(1.5));
    CHECK(select_tolerance({5, 4, 3, 2, 1}, 0.4) == doctest::Approx(2.5));
    CHECK(select_tolerance({3, 3, 3, 3, 3}, 0.2) == doctest::Approx(3.0)); // degenerate
    CHECK_THROWS(select_tolerance({5, 4, 3}, 0.2)); // n * p0 not integral
}

TEST_CASE("config validation") {
    SubSimConfig c = toy_config();
    CHECK(c.validate().empty());
    c.p0 = 0.25; // 1/p0 = 4, p0*2000 = 500
    CHECK(c.validate().empty());
    c.p0 = 0.15; // 1/p0 not integral
    CHECK_THROWS(c.validate());
    c.p0 = 0.5;
    CHECK_FALSE(c.validate().empty()); // legal but outside the recommended range
    c.p0 = 0.2;
    c.n_per_level = 1999; // p0 * n not integral
    CHECK_THROWS(c.validate());
}

TEST_CASE("abc_rejection: unconstrained limit returns the prior") {
    const ToyProblem toy = ToyProblem::make();
    RngStream rng(31);
    const DataRegion region(Norm::L2, 1e18);
    const RejectionResult res = abc_rejection(toy.model, toy.data, region, 2000, rng);
    CHECK(res.trials == 2000); // nothing rejected
    std::vector<double> thetas;
    for (const auto& s : res.samples) thetas.push_back(s.theta[0]);
    const double d = testsup::ks_statistic(
        thetas, [&](double x) { return testsup::uniform_cdf(x, toy.lo, toy.hi); });
    CHECK(d < testsup::ks_critical(1e-3, thetas.size()));
}

TEST_CASE("abc_rejection: acceptance rate matches direct Monte Carlo") {
    const ToyProblem toy = ToyProblem::make();
    // tolerance at roughly the 10% tail, from a pilot sample
    const double eps = [&] {
        RngStream rng(32);
        std::vector<double> d;
        for (int i = 0; i < 5000; ++i) {
            const Vector theta = prior_sample(toy.model.prior(), rng);
            d.push_back(forward_draw(toy.model, theta, toy.data, Norm::L2, rng).discrepancy);
        }
        std::sort(d.begin(), d.end());
        return d[500];
    }();
    const double p_mc = toy.prob_region_mc(eps, 200000);
    REQUIRE(p_mc > 0.03);

    RngStream rng(33);
    const Index j = 3000;
    const RejectionResult res = abc_rejection(toy.model, toy.data, DataRegion(Norm::L2, eps), j, rng);
    const double p_abc = res.acceptance_rate();
    // binomial error from the oracle plus the (approximate) rejection-count error
    const double se = std::sqrt(p_mc * (1.0 - p_mc) / 200000.0) +
                      std::sqrt(p_mc * (1.0 - p_mc) / (j / p_mc));
    CHECK(std::abs(p_abc - p_mc) < 3.0 * se);
}

TEST_CASE("abc_rejection: budget exhaustion carries an estimate") {
    const ToyProblem toy = ToyProblem::make();
    RngStream rng(34);
    CHECK_THROWS_AS(abc_rejection(toy.model, toy.data, DataRegion(Norm::L2, 1e-6), 10, rng, 500),
                    TrialBudgetExhausted);
}

TEST_CASE("abc_model_choice_baseline: symmetry and prior recovery") {
    const ToyProblem toy = ToyProblem::make();
    std::vector<ModelClassSpec> models{toy.model, toy.model};

    RngStream rng(35);
    const double eps = 7.0; // ~10% acceptance region for this fixture
    const Index j = 1500;
    const ModelChoiceResult res =
        abc_model_choice_baseline(models, toy.data, DataRegion(Norm::L2, eps), j, rng);
    const double se = std::sqrt(0.25 / static_cast<double>(j));
    CHECK(std::abs(res.frequencies[0] - 0.5) < 3.0 * se);
    CHECK(res.frequencies.sum() == doctest::Approx(1.0));

    // unconstrained limit recovers unequal model priors
    Vector priors(2);
    priors << 0.3, 0.7;
    RngStream rng2(36);
    const ModelChoiceResult res2 =
        abc_model_choice_baseline(models, toy.data, DataRegion(Norm::L2, 1e18), j, rng2, priors);
    CHECK(std::abs(res2.frequencies[0] - 0.3) < 3.0 * std::sqrt(0.3 * 0.7 / j));
}

TEST_CASE("init_level: exact percentile split") {
    const ToyProblem toy = ToyProblem::make();
    const SubSimConfig config = toy_config();
    const LevelRecord level = init_level(toy.model, toy.data, config);
    REQUIRE(level.samples.size() == 2000);
    // sorted descending
    for (std::size_t i = 1; i < level.samples.size(); ++i)
        CHECK(level.samples[i - 1].discrepancy >= level.samples[i].discrepancy);
    // exactly p0 * N_t samples inside the tolerance
    Index inside = 0;
    for (const auto& s : level.samples) inside += s.discrepancy <= level.tolerance ? 1 : 0;
    CHECK(inside == 400);
}

TEST_CASE("mma_step: component short-circuit costs no simulation") {
    const ToyProblem toy = ToyProblem::make();
    HierarchicalSample cur;
    cur.theta = Vector::Constant(1, 1.0);
    cur.discrepancy = 1.0;
    cur.sigma2 = toy.sigma * toy.sigma;

    RngStream rng(40);
    const Vector huge_scale = Vector::Constant(1, 1e12); // proposals leave the box a.s.
    int simulated = 0, moved = 0;
    for (int i = 0; i < 200; ++i) {
        const MmaResult res = mma_step(cur, toy.model, toy.data, DataRegion(Norm::L2, 2.0),
                                       huge_scale, rng);
        simulated += res.simulated ? 1 : 0;
        moved += res.accepted ? 1 : 0;
        CHECK(res.next.theta[0] == cur.theta[0]);
    }
    CHECK(simulated == 0);
    CHECK(moved == 0);
}

TEST_CASE("mma_step: indicator-true move is always accepted in a uniform box") {
    // echo model: output equals the data, the indicator never rejects
    GroundMotion motion(0.1, Vector::Ones(10));
    Dataset data(motion, Vector::Ones(10), 1);
    ModelClassSpec echo("echo", PriorSpec::uniform_box(Vector::Zero(1), Vector::Constant(1, 1.0)),
                        std::make_shared<EchoSimulator>(data.observed), NuisanceMode::FixedSigma,
                        0.0);
    HierarchicalSample cur;
    cur.theta = Vector::Constant(1, 0.5);
    cur.discrepancy = 0.0;

    RngStream rng(41);
    const Vector scale = Vector::Constant(1, 0.05);
    int accepted = 0, steps = 0;
    for (int i = 0; i < 500; ++i) {
        const MmaResult res = mma_step(cur, echo, data, DataRegion(Norm::L2, 1.0), scale, rng);
        ++steps;
        if (res.accepted) {
            ++accepted;
            CHECK(res.simulated);
        }
        cur = res.next;
    }
    // inside-the-box proposals always pass both stages; only boundary
    // rejections (prior ratio zero) remain
    CHECK(accepted > 0.5 * steps);
    for (int i = 0; i < 10; ++i) {
        // forced interior proposals: tiny scale keeps the chain inside
        const MmaResult res =
            mma_step(cur, echo, data, DataRegion(Norm::L2, 1.0), Vector::Constant(1, 1e-6), rng);
        CHECK(res.accepted);
        cur = res.next;
    }
}

TEST_CASE("mma chain with always-true indicator leaves the prior invariant") {
    // stationarity of the component-wise rule: with the indicator disabled
    // the chain must sample the prior (here a lognormal, so the ratio test
    // is exercised off the uniform fast path)
    GroundMotion motion(0.1, Vector::Ones(10));
    Dataset data(motion, Vector::Ones(10), 1);
    ModelClassSpec echo("echo",
                        PriorSpec::lognormal_product(Vector::Zero(1), Vector::Constant(1, 0.7)),
                        std::make_shared<EchoSimulator>(data.observed), NuisanceMode::FixedSigma,
                        0.0);
    HierarchicalSample cur;
    cur.theta = Vector::Constant(1, 1.0);
    cur.discrepancy = 0.0;

    RngStream rng(42);
    const Vector scale = Vector::Constant(1, 0.9);
    std::vector<double> visited;
    for (int i = 0; i < 40000; ++i) {
        cur = mma_step(cur, echo, data, DataRegion(Norm::L2, 1.0), scale, rng).next;
        if (i % 4 == 3) visited.push_back(cur.theta[0]); // thin the chain
    }
    const double d = testsup::ks_statistic(
        visited, [](double x) { return testsup::lognormal_cdf(x, 0.0, 0.7); });
    CHECK(d < testsup::ks_critical(1e-3, visited.size()) * 2.5); // correlated samples
}

TEST_CASE("self_regulate: fixed point, update factor, clamping") {
    SubSimConfig c = toy_config();
    const Vector prior_sd = Vector::Constant(2, 1.0);
    const Vector scales = Vector::Constant(2, 0.1);
    CHECK((self_regulate(scales, 0.5, c, prior_sd) - scales).norm() == 0.0);
    CHECK(self_regulate(scales, 0.2, c, prior_sd)[0] ==
          doctest::Approx(0.1 * std::exp(-0.3)));
    CHECK(self_regulate(Vector::Constant(2, 1e-12), 0.0, c, prior_sd)[0] ==
          doctest::Approx(1e-8)); // clamped from below
    CHECK(self_regulate(Vector::Constant(2, 1e5), 1.0, c, prior_sd)[0] ==
          doctest::Approx(1e2)); // clamped from above
}

TEST_CASE("should_stop: the three rules") {
    SubSimConfig c = toy_config();
    c.eps_target = 0.5;
    SubSimRun run;
    run.config = c;

    LevelRecord lvl;
    lvl.level_index = 2;
    lvl.tolerance = 0.25; // half the target
    lvl.mean_accept = 0.4;
    run.levels.push_back(lvl);
    CHECK(should_stop(run, c).value() == StopReason::EpsTarget);

    run.levels.back().tolerance = 1.0;
    run.levels.back().mean_accept = 0.04; // below 0.1 * alpha*
    CHECK(should_stop(run, c).value() == StopReason::AcceptanceCollapse);

    run.levels.back().mean_accept = 0.4;
    CHECK_FALSE(should_stop(run, c).has_value());

    c.max_levels = 1;
    CHECK(should_stop(run, c).value() == StopReason::MaxLevels);
}

TEST_CASE("run_level: perfect-sampling arithmetic at two p0 values") {
    const ToyProblem toy = ToyProblem::make();
    for (const double p0 : {0.2, 0.1}) {
        SubSimConfig config = toy_config();
        config.p0 = p0;
        config.n_per_level = 2000;
        const LevelRecord first = init_level(toy.model, toy.data, config);

        const auto n_seeds = static_cast<Index>(std::llround(p0 * 2000));
        std::vector<HierarchicalSample> seeds(first.samples.end() - n_seeds, first.samples.end());
        Vector scales = 0.1 * toy.model.prior().component_sd();
        Vector prior_sd = toy.model.prior().component_sd();
        const LevelRecord level = run_level(seeds, toy.model, toy.data, config, first.tolerance, 2,
                                            scales, prior_sd);
        CHECK(level.samples.size() == 2000); // n_chains * chain_len regenerates N_t
        CHECK(level.tolerance < first.tolerance);
        // every sample respects the previous level's region
        for (const auto& s : level.samples) CHECK(s.discrepancy <= first.tolerance);
        // chains per level: each chain id appears exactly 1/p0 times
        std::map<Index, Index> counts;
        for (Index id : level.chain_id) counts[id]++;
        CHECK(counts.size() == static_cast<std::size_t>(n_seeds));
        for (const auto& [id, cnt] : counts) CHECK(cnt == static_cast<Index>(std::llround(1.0 / p0)));
    }
}

TEST_CASE("run_abc_subsim: toy posterior matches the conjugate oracle") {
    // wide prior box: the rare event is parameter-driven, so the sampler
    // reaches the target tolerance with healthy acceptance
    const ToyProblem toy = ToyProblem::make_wide();
    SubSimConfig config = toy_config(99);

    // pilot tolerance at roughly the 1e-3 tail to keep this test quick
    const double eps_pilot = [&] {
        RngStream rng(50);
        std::vector<double> d;
        for (int i = 0; i < 20000; ++i) {
            const Vector theta = prior_sample(toy.model.prior(), rng);
            d.push_back(forward_draw(toy.model, theta, toy.data, Norm::L2, rng).discrepancy);
        }
        std::sort(d.begin(), d.end());
        return d[20];
    }();
    config.eps_target = eps_pilot;
    const SubSimRun run = run_abc_subsim(toy.model, toy.data, config);
    REQUIRE(run.stop_reason == StopReason::EpsTarget);

    const auto& samples = run.levels.back().samples;
    const auto& chains = run.levels.back().chain_id;
    double mean = 0.0;
    for (const auto& s : samples) mean += s.theta[0];
    mean /= static_cast<double>(samples.size());

    // batch-means standard error over chains
    std::map<Index, std::pair<double, Index>> by_chain;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto& acc = by_chain[chains[i]];
        acc.first += samples[i].theta[0];
        acc.second += 1;
    }
    std::vector<double> chain_means;
    for (const auto& [id, acc] : by_chain)
        chain_means.push_back(acc.first / static_cast<double>(acc.second));
    const double se = testsup::sd_of(chain_means) / std::sqrt(static_cast<double>(chain_means.size()));

    CHECK(std::abs(mean - toy.post_mean) < 3.0 * std::max(se, 1e-4));

    // nesting invariant across all levels
    for (std::size_t j = 1; j < run.levels.size(); ++j)
        for (const auto& s : run.levels[j].samples)
            CHECK(s.discrepancy <= run.levels[j - 1].tolerance);
    // strictly decreasing tolerances
    for (std::size_t j = 1; j < run.levels.size(); ++j)
        CHECK(run.levels[j].tolerance < run.levels[j - 1].tolerance);
    // the percentile construction puts exactly p0*N_t samples inside each
    // level tolerance (more only when repeated chain samples tie at the cut)
    for (const auto& level : run.levels) {
        Index inside = 0;
        for (const auto& s : level.samples) inside += s.discrepancy <= level.tolerance ? 1 : 0;
        const auto& d = level.samples;
        const bool tie_at_cut = d[d.size() - 401].discrepancy == d[d.size() - 400].discrepancy;
        if (tie_at_cut)
            CHECK(inside >= 400);
        else
            CHECK(inside == 400);
    }
}

TEST_CASE("run_abc_subsim: unconstrained target returns the prior") {
    const ToyProblem toy = ToyProblem::make();
    SubSimConfig config = toy_config(7);
    config.eps_target = 1e18; // satisfied by level 1
    const SubSimRun run = run_abc_subsim(toy.model, toy.data, config);
    CHECK(run.levels.size() == 1);
    std::vector<double> thetas;
    for (const auto& s : run.levels[0].samples) thetas.push_back(s.theta[0]);
    const double d = testsup::ks_statistic(
        thetas, [&](double x) { return testsup::uniform_cdf(x, toy.lo, toy.hi); });
    CHECK(d < testsup::ks_critical(1e-3, thetas.size()));
}

TEST_CASE("run_abc_subsim: bit-identical across 1/4/8 threads and reruns") {
    const ToyProblem toy = ToyProblem::make();
    SubSimConfig config = toy_config(123);
    config.n_per_level = 500;
    config.max_levels = 4;

    std::vector<std::vector<std::uint8_t>> blobs;
    for (const int threads : {1, 4, 8, 1}) {
        config.n_threads = threads;
        blobs.push_back(serialize_run(run_abc_subsim(toy.model, toy.data, config)));
    }
    // thread count is part of the config snapshot; blank it before comparing
    // by re-serializing with a fixed value
    for (auto& blob : blobs) {
        SubSimRun run = deserialize_run(blob);
        run.config.n_threads = 1;
        blob = serialize_run(run);
    }
    CHECK(blobs[0] == blobs[1]);
    CHECK(blobs[0] == blobs[2]);
    CHECK(blobs[0] == blobs[3]);
}

TEST_CASE("simulator failure during sampling counts as rejection") {
    // a simulator that diverges for theta > 1 never contributes samples
    class Flaky final : public ForwardSimulator {
    public:
        Index n_params() const override { return 1; }
        Index n_channels() const override { return 1; }
        Vector response(const ConstVectorRef& theta, const GroundMotion& motion) const override {
            if (theta[0] > 1.0) throw SimulationError("flaky", 0);
            return theta[0] * motion.accel;
        }
    };
    GroundMotion motion(0.1, Vector::Ones(20));
    Dataset data(motion, 0.5 * motion.accel, 1);
    ModelClassSpec model("flaky", PriorSpec::uniform_box(Vector::Zero(1), Vector::Constant(1, 2.0)),
                         std::make_shared<Flaky>(), NuisanceMode::FixedSigma, 0.05);

    SubSimConfig config = toy_config(5);
    config.n_per_level = 200;
    config.max_levels = 3;
    const SubSimRun run = run_abc_subsim(model, data, config);
    for (const auto& level : run.levels)
        for (const auto& s : level.samples) CHECK(s.theta[0] <= 1.0);
}
