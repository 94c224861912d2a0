// subsim-abc: Bayesian inference and model selection for dynamic state-space
// models via multi-level tolerance sampling. Commands are pipeline stages
// communicating through files; see README.md.

#include "subsim/evidence.hpp"
#include "subsim/io.hpp"
#include "subsim/models_builtin.hpp"
#include "subsim/posterior_stats.hpp"
#include "subsim/run_config.hpp"
#include "subsim/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace subsim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out_dir;
};

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::string compact_config_json(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return nlohmann::json::parse(buf.str()).dump();
}

std::string out_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

RunConfig load_config(const CommonArgs& args) {
    RunConfig rc = parse_run_config(args.config_path);
    if (!args.out_dir.empty()) rc.output.dir = args.out_dir;
    if (rc.sampler) {
        if (args.seed) rc.sampler->master_seed = *args.seed;
        if (args.threads) rc.sampler->n_threads = *args.threads;
    }
    fs::create_directories(rc.output.dir);
    return rc;
}

std::vector<std::pair<std::string, std::string>> manifest_base(const CommonArgs& args,
                                                               const std::string& command) {
    return {{"code_version", kCodeVersion},
            {"created_utc", timestamp_utc()},
            {"command", command},
            {"config_json", compact_config_json(args.config_path)}};
}

std::string motion_description(const MotionConfig& mc) {
    switch (mc.source) {
        case MotionConfig::Source::SurrogateLong: return "surrogate:long";
        case MotionConfig::Source::SurrogateShort: return "surrogate:short";
        default: return mc.path;
    }
}

int cmd_simulate(const CommonArgs& args) {
    const RunConfig rc = load_config(args);
    if (!rc.model) throw ConfigError("simulate: config needs a model section");
    if (!rc.data || !rc.data->motion) throw ConfigError("simulate: config needs data.motion");
    const GroundMotion motion = build_motion(*rc.data->motion);
    const Vector params = build_fixed_params(*rc.model);
    const std::string& dir = rc.output.dir;

    if (rc.model->name == "bilinear") {
        BilinearParams p;
        p.m = params[0];
        p.c = params[1];
        p.k1 = params[2];
        p.k2 = params[3];
        p.z_y = params[4];
        const BilinearTrace trace = simulate_bilinear_trace(p, motion, -1.0, rc.model->substeps);
        Vector time(trace.displacement.size());
        for (Index i = 0; i < time.size(); ++i) time[i] = static_cast<double>(i + 1) * trace.dt;
        write_tsv(out_path(dir, "response.tsv"), {"time", "displacement", "velocity"},
                  {time, trace.displacement, trace.velocity});
        write_tsv(out_path(dir, "hysteresis.tsv"), {"displacement", "force"},
                  {trace.displacement, trace.force});
    } else if (rc.model->name == "masing") {
        MasingParams p;
        p.masses = rc.model->masses;
        p.k = params.segment(0, 3);
        p.r_u = params.segment(3, 3);
        p.alpha = params.segment(6, 3);
        p.c_m = params[9];
        p.c_k = params[10];
        const MasingTrace trace = simulate_masing_trace(p, motion, -1.0, rc.model->substeps);
        Vector time(trace.drifts.rows());
        for (Index i = 0; i < time.size(); ++i) time[i] = static_cast<double>(i + 1) * trace.dt;
        write_tsv(out_path(dir, "response.tsv"), {"time", "drift_1", "drift_2", "drift_3"},
                  {time, trace.drifts.col(0), trace.drifts.col(1), trace.drifts.col(2)});
        write_tsv(out_path(dir, "hysteresis.tsv"),
                  {"drift_1", "force_1", "drift_2", "force_2", "drift_3", "force_3"},
                  {trace.drifts.col(0), trace.story_force.col(0), trace.drifts.col(1),
                   trace.story_force.col(1), trace.drifts.col(2), trace.story_force.col(2)});
    } else {
        const auto sim = build_simulator(*rc.model);
        const Vector y = sim->response(Vector(), motion);
        Vector time(y.size());
        for (Index i = 0; i < time.size(); ++i) time[i] = static_cast<double>(i + 1) * motion.dt;
        write_tsv(out_path(dir, "response.tsv"), {"time", "output"}, {time, y});
    }

    auto manifest = manifest_base(args, "simulate");
    manifest.emplace_back("model", rc.model->name);
    manifest.emplace_back("motion", motion_description(*rc.data->motion));
    manifest.emplace_back("motion_scale", std::to_string(rc.data->motion->scale));
    write_manifest(manifest, out_path(dir, "manifest.txt"));
    std::cout << "simulate: wrote response.tsv";
    if (rc.model->name != "builtin-toy") std::cout << ", hysteresis.tsv";
    std::cout << " to " << dir << "\n";
    return 0;
}

int cmd_synth(const CommonArgs& args) {
    const RunConfig rc = load_config(args);
    if (!rc.model) throw ConfigError("synth: config needs a model section");
    if (!rc.data || !rc.data->motion || !rc.data->synth)
        throw ConfigError("synth: config needs data.motion and data.synth");
    const GroundMotion motion = build_motion(*rc.data->motion);
    const Vector params = build_fixed_params(*rc.model);
    const auto sim = build_simulator(*rc.model);

    // free parameters empty: the simulator maps the empty vector through the
    // all-fixed binding
    const SynthResult synth =
        synth_dataset(*sim, params.head(0), motion, rc.data->synth->noise_ratio,
                      rc.data->synth->seed);
    const std::string& dir = rc.output.dir;
    save_dataset(synth.data, out_path(dir, "dataset.tsv"), synth.sigma, rc.data->synth->seed);

    auto manifest = manifest_base(args, "synth");
    manifest.emplace_back("model", rc.model->name);
    manifest.emplace_back("motion", motion_description(*rc.data->motion));
    manifest.emplace_back("motion_scale", std::to_string(rc.data->motion->scale));
    manifest.emplace_back("noise_ratio", std::to_string(rc.data->synth->noise_ratio));
    manifest.emplace_back("noise_sigma", std::to_string(synth.sigma));
    manifest.emplace_back("synth_seed", std::to_string(rc.data->synth->seed));
    manifest.emplace_back("dataset_digest", hex_digest(synth.data.digest()));
    write_manifest(manifest, out_path(dir, "manifest.txt"));
    std::cout << "synth: wrote dataset.tsv (sigma = " << synth.sigma << ") to " << dir << "\n";
    return 0;
}

void write_summary(const SubSimRun& run, const std::vector<std::string>& names,
                   const std::string& path) {
    std::ostringstream out;
    out << "model = " << run.model_name << "\n";
    out << "levels = " << run.levels.size() << "\n";
    out << "final_tolerance = " << run.levels.back().tolerance << "\n";
    out << "stop_reason = " << stop_reason_name(run.stop_reason) << "\n";
    out << "simulator_calls = " << run.total_simulator_calls << "\n";
    out << "mean_sigma_v = " << mean_sigma_v(run) << "\n";
    out << "\nparameter  mean  sd  lognormal_map  lognormal_sd\n";
    for (const auto& s : summarize_posterior(run, names)) {
        out << s.name << "  " << s.mean << "  " << s.sd << "  " << s.lognormal_map << "  "
            << s.lognormal_sd << "\n";
    }
    std::ofstream f(path, std::ios::trunc);
    f << out.str();
}

int cmd_infer(const CommonArgs& args) {
    const RunConfig rc = load_config(args);
    if (!rc.model) throw ConfigError("infer: config needs a model section");
    if (!rc.data || !rc.data->dataset_path)
        throw ConfigError("infer: config needs data.dataset.path (run synth first)");
    if (!rc.sampler) throw ConfigError("infer: config needs a sampler section");

    const Dataset data = load_dataset(*rc.data->dataset_path);
    const ModelClassSpec model = build_model(*rc.model);
    for (const auto& w : rc.sampler->validate()) std::cerr << "warning: " << w << "\n";

    const std::string& dir = rc.output.dir;
    std::vector<std::string> names;
    for (const auto& f : rc.model->free) names.push_back(f.name);

    // each completed level flushes the container so a failed run keeps its
    // finished levels on disk
    const auto flush = [&](const SubSimRun& partial) {
        save_run(partial, out_path(dir, "run.bin"));
    };

    SubSimRun run;
    try {
        run = run_abc_subsim(model, data, *rc.sampler, flush);
    } catch (const std::exception& e) {
        std::cerr << "infer: sampler failed: " << e.what() << " (partial levels flushed)\n";
        return kExitRuntime;
    }

    save_run(run, out_path(dir, "run.bin"));
    if (rc.output.export_samples) export_samples_tsv(run, names, out_path(dir, "samples.tsv"));
    write_summary(run, names, out_path(dir, "summary.txt"));

    auto manifest = manifest_base(args, "infer");
    manifest.emplace_back("model", run.model_name);
    manifest.emplace_back("dataset", *rc.data->dataset_path);
    manifest.emplace_back("dataset_digest", hex_digest(run.dataset_digest));
    manifest.emplace_back("master_seed", std::to_string(rc.sampler->master_seed));
    manifest.emplace_back("threads", std::to_string(rc.sampler->n_threads));
    manifest.emplace_back("levels", std::to_string(run.levels.size()));
    manifest.emplace_back("final_tolerance", std::to_string(run.levels.back().tolerance));
    manifest.emplace_back("stop_reason", stop_reason_name(run.stop_reason));
    write_manifest(manifest, out_path(dir, "manifest.txt"));

    std::cout << "infer: " << run.levels.size() << " levels, final tolerance "
              << run.levels.back().tolerance << " (" << stop_reason_name(run.stop_reason)
              << "), " << run.total_simulator_calls << " simulator calls\n";
    return 0;
}

int cmd_evidence(const CommonArgs& args) {
    const RunConfig rc = load_config(args);
    if (!rc.evidence) throw ConfigError("evidence: config needs an evidence section");
    const SubSimRun run = load_run(rc.evidence->run_path);
    const Vector& grid = rc.evidence->grid.values;

    EvidenceCurve curve;
    Index ok = 0;
    for (Index g = 0; g < grid.size(); ++g) {
        EvidencePoint pt;
        pt.epsilon = grid[g];
        try {
            pt.prob = prob_at(run, grid[g]);
            pt.log_evidence = evidence_at(run, grid[g], run.n_obs);
        } catch (const std::exception& e) {
            std::cerr << "warning: eps = " << grid[g] << ": " << e.what() << "\n";
            continue;
        }
        curve.points.push_back(pt);
        ++ok;
    }
    if (ok == 0) {
        std::cerr << "evidence: no grid point lies in the run's covered range\n";
        return kExitRuntime;
    }
    const std::string& dir = rc.output.dir;
    export_evidence_tsv(curve, out_path(dir, "evidence.tsv"));
    export_evidence_tsv(prob_curve(run, run.n_obs), out_path(dir, "prob_curve.tsv"));

    auto manifest = manifest_base(args, "evidence");
    manifest.emplace_back("run", rc.evidence->run_path);
    manifest.emplace_back("model", run.model_name);
    manifest.emplace_back("dataset_digest", hex_digest(run.dataset_digest));
    write_manifest(manifest, out_path(dir, "manifest.txt"));
    std::cout << "evidence: " << ok << "/" << grid.size() << " grid points to " << dir << "\n";
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    const RunConfig rc = load_config(args);
    if (!rc.compare) throw ConfigError("compare: config needs a compare section");

    std::vector<SubSimRun> runs;
    for (const auto& path : rc.compare->run_paths) runs.push_back(load_run(path));

    const auto n_models = static_cast<Index>(runs.size());
    Vector priors = rc.compare->priors.size() == 0
                        ? Vector::Constant(n_models, 1.0 / static_cast<double>(n_models))
                        : rc.compare->priors;
    if (priors.size() != n_models) throw ConfigError("compare.priors: one weight per run required");
    if ((priors.array() <= 0.0).any()) throw ConfigError("compare.priors: weights must be > 0");
    priors /= priors.sum();
    const Vector log_priors = priors.array().log();

    Vector grid;
    if (rc.compare->grid) {
        grid = rc.compare->grid->values;
    } else {
        double lo = 0.0, hi = std::numeric_limits<double>::infinity();
        for (const auto& run : runs) {
            lo = std::max(lo, run.levels.back().tolerance);
            hi = std::min(hi, run.levels.front().tolerance);
        }
        if (!(hi > lo)) throw ConfigError("compare: default grid is empty, give compare.grid");
        grid.resize(25);
        for (Index i = 0; i < grid.size(); ++i)
            grid[i] = std::exp(std::log(hi) +
                               (std::log(lo) - std::log(hi)) * static_cast<double>(i) /
                                   static_cast<double>(grid.size() - 1));
    }

    const ModelComparisonReport report = compare_models(runs, log_priors, grid);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

    const std::string& dir = rc.output.dir;
    export_compare_tsv(report, out_path(dir, "compare.tsv"));
    export_posterior_vs_eps_tsv(report, out_path(dir, "posterior_vs_eps.tsv"));

    auto manifest = manifest_base(args, "compare");
    manifest.emplace_back("dataset_digest", hex_digest(runs.front().dataset_digest));
    for (const auto& m : report.models)
        manifest.emplace_back("posterior." + m.name, std::to_string(m.posterior_prob));
    write_manifest(manifest, out_path(dir, "manifest.txt"));

    std::cout << "compare:";
    for (const auto& m : report.models) std::cout << " " << m.name << "=" << m.posterior_prob;
    std::cout << "\n";
    return 0;
}

int cmd_plot(const CommonArgs& args) {
    const RunConfig rc = load_config(args);
    if (!rc.plot) throw ConfigError("plot: config needs a plot section");
    const std::string& dir = rc.output.dir;
    for (const auto& table : rc.plot->tables) {
        const std::string stem = fs::path(table).stem().string();
        plot_table_file(table, out_path(dir, stem + ".svg"), rc.plot->log_x, rc.plot->log_y);
        std::cout << "plot: " << table << " -> " << stem << ".svg\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ABC-by-subset-simulation inference for dynamic state-space models"};
    app.require_subcommand(1);

    CommonArgs args;
    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "configuration file (JSON)")->required();
        cmd->add_option("--seed", [&args](const CLI::results_t& r) {
            args.seed = std::stoull(r[0]);
            return true;
        }, "override sampler.master_seed");
        cmd->add_option("--threads", [&args](const CLI::results_t& r) {
            args.threads = std::stoi(r[0]);
            return true;
        }, "override worker thread count");
        cmd->add_option("--out", args.out_dir, "output directory (overrides output.dir)");
        return cmd;
    };

    auto* simulate = add_common(app.add_subcommand("simulate", "deterministic response traces"));
    auto* synth = add_common(app.add_subcommand("synth", "generate a noisy synthetic dataset"));
    auto* infer = add_common(app.add_subcommand("infer", "posterior sampling on a dataset"));
    auto* evidence = add_common(app.add_subcommand("evidence", "evidence curve from a run file"));
    auto* compare = add_common(app.add_subcommand("compare", "posterior model probabilities"));
    auto* plot = add_common(app.add_subcommand("plot", "render curve tables to SVG"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(args);
        if (synth->parsed()) return cmd_synth(args);
        if (infer->parsed()) return cmd_infer(args);
        if (evidence->parsed()) return cmd_evidence(args);
        if (compare->parsed()) return cmd_compare(args);
        if (plot->parsed()) return cmd_plot(args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
