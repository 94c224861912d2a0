#include "subsim/run_config.hpp"

#include "subsim/models_builtin.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace subsim {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(section + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(section + ": unknown key '" + key + "'");
    }
}

double get_number(const json& obj, const std::string& section, const char* key) {
    if (!obj.contains(key)) throw ConfigError(section + ": missing '" + std::string(key) + "'");
    if (!obj[key].is_number()) throw ConfigError(section + ": '" + key + "' must be a number");
    return obj[key].get<double>();
}

double get_number_or(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    return obj[key].get<double>();
}

PriorSpec parse_prior(const json& j, const std::string& section) {
    check_keys(j, section, {"type", "lower", "upper", "log_mean", "log_std"});
    const std::string type = j.value("type", "");
    if (type == "uniform") {
        const double lo = get_number(j, section, "lower");
        const double hi = get_number(j, section, "upper");
        return PriorSpec::uniform_box(Vector::Constant(1, lo), Vector::Constant(1, hi));
    }
    if (type == "lognormal") {
        const double mu = get_number(j, section, "log_mean");
        const double sd = get_number(j, section, "log_std");
        return PriorSpec::lognormal_product(Vector::Constant(1, mu), Vector::Constant(1, sd));
    }
    throw ConfigError(section + ": prior type must be 'uniform' or 'lognormal'");
}

Vector parse_vector(const json& j, const std::string& section) {
    if (!j.is_array()) throw ConfigError(section + ": expected an array of numbers");
    Vector v(static_cast<Index>(j.size()));
    Index i = 0;
    for (const auto& x : j) {
        if (!x.is_number()) throw ConfigError(section + ": expected an array of numbers");
        v[i++] = x.get<double>();
    }
    return v;
}

ModelConfig parse_model(const json& j) {
    check_keys(j, "model",
               {"name", "fixed", "free", "bind", "masses", "substeps", "nuisance", "state_noise",
                "label"});
    ModelConfig mc;
    mc.name = j.value("name", "");
    if (mc.name != "bilinear" && mc.name != "masing" && mc.name != "builtin-toy" &&
        mc.name != "toy")
        throw ConfigError("model.name must be bilinear, masing or builtin-toy");
    if (mc.name == "toy") mc.name = "builtin-toy";
    mc.label = j.value("label", mc.name);

    if (j.contains("fixed")) {
        if (!j["fixed"].is_object()) throw ConfigError("model.fixed: expected an object");
        for (const auto& [key, value] : j["fixed"].items()) {
            if (!value.is_number()) throw ConfigError("model.fixed." + key + ": expected a number");
            mc.fixed[key] = value.get<double>();
        }
    }
    if (j.contains("free")) {
        if (!j["free"].is_array()) throw ConfigError("model.free: expected an array");
        std::set<std::string> seen;
        for (const auto& f : j["free"]) {
            check_keys(f, "model.free[]", {"name", "prior"});
            const std::string name = f.value("name", "");
            if (name.empty()) throw ConfigError("model.free[]: missing name");
            if (!seen.insert(name).second)
                throw ConfigError("model.free: duplicate parameter '" + name + "'");
            if (!f.contains("prior")) throw ConfigError("model.free[" + name + "]: missing prior");
            mc.free.push_back({name, parse_prior(f["prior"], "model.free[" + name + "].prior")});
        }
    }
    if (j.contains("bind")) {
        if (!j["bind"].is_object()) throw ConfigError("model.bind: expected an object");
        for (const auto& [key, value] : j["bind"].items()) {
            if (!value.is_string()) throw ConfigError("model.bind." + key + ": expected a string");
            mc.bind[key] = value.get<std::string>();
        }
    }
    mc.masses = j.contains("masses") ? parse_vector(j["masses"], "model.masses")
                                     : Vector::Constant(3, 1.25e5);
    mc.substeps = static_cast<int>(get_number_or(j, "substeps", 20));
    if (mc.substeps < 1) throw ConfigError("model.substeps must be >= 1");
    if (j.contains("nuisance")) {
        check_keys(j["nuisance"], "model.nuisance", {"mode", "sigma"});
        const std::string mode = j["nuisance"].value("mode", "laplace");
        if (mode == "laplace")
            mc.nuisance_mode = NuisanceMode::LaplaceMarginalized;
        else if (mode == "fixed_sigma")
            mc.nuisance_mode = NuisanceMode::FixedSigma;
        else
            throw ConfigError("model.nuisance.mode must be 'laplace' or 'fixed_sigma'");
        mc.fixed_sigma = get_number_or(j["nuisance"], "sigma", 0.0);
        if (mc.nuisance_mode == NuisanceMode::FixedSigma && mc.fixed_sigma < 0.0)
            throw ConfigError("model.nuisance.sigma must be >= 0");
    }
    if (j.contains("state_noise")) mc.state_noise = parse_vector(j["state_noise"], "model.state_noise");
    return mc;
}

DataConfig parse_data(const json& j) {
    check_keys(j, "data", {"motion", "dataset", "synth"});
    DataConfig dc;
    if (j.contains("motion")) {
        const json& m = j["motion"];
        check_keys(m, "data.motion", {"path", "surrogate", "scale"});
        MotionConfig mo;
        const bool has_path = m.contains("path"), has_sur = m.contains("surrogate");
        if (has_path == has_sur)
            throw ConfigError("data.motion: exactly one of 'path' or 'surrogate' required");
        if (has_path) {
            mo.source = MotionConfig::Source::File;
            mo.path = m["path"].get<std::string>();
        } else {
            const std::string s = m["surrogate"].get<std::string>();
            if (s == "long")
                mo.source = MotionConfig::Source::SurrogateLong;
            else if (s == "short")
                mo.source = MotionConfig::Source::SurrogateShort;
            else
                throw ConfigError("data.motion.surrogate must be 'long' or 'short'");
        }
        mo.scale = get_number_or(m, "scale", 1.0);
        dc.motion = std::move(mo);
    }
    if (j.contains("dataset")) {
        check_keys(j["dataset"], "data.dataset", {"path"});
        dc.dataset_path = j["dataset"].value("path", "");
        if (dc.dataset_path->empty()) throw ConfigError("data.dataset.path: missing");
    }
    if (j.contains("synth")) {
        check_keys(j["synth"], "data.synth", {"noise_ratio", "seed"});
        SynthConfig sc;
        sc.noise_ratio = get_number_or(j["synth"], "noise_ratio", 0.05);
        if (sc.noise_ratio < 0.0) throw ConfigError("data.synth.noise_ratio must be >= 0");
        sc.seed = j["synth"].value("seed", std::uint64_t{0});
        dc.synth = sc;
    }
    return dc;
}

SubSimConfig parse_sampler(const json& j, std::string& weight_name) {
    check_keys(j, "sampler",
               {"n_per_level", "p0", "target_accept", "adapt_prob", "max_levels", "eps_target",
                "master_seed", "norm", "threads", "store_outputs", "nuisance_weight"});
    SubSimConfig c;
    c.n_per_level = static_cast<Index>(get_number_or(j, "n_per_level", 2000));
    c.p0 = get_number_or(j, "p0", 0.2);
    c.target_accept = get_number_or(j, "target_accept", 0.5);
    c.adapt_prob = get_number_or(j, "adapt_prob", 0.1);
    c.max_levels = static_cast<Index>(get_number_or(j, "max_levels", 12));
    if (j.contains("eps_target")) c.eps_target = j["eps_target"].get<double>();
    c.master_seed = j.value("master_seed", std::uint64_t{0});
    const std::string norm = j.value("norm", "l2");
    if (norm == "l2")
        c.norm = Norm::L2;
    else if (norm == "linf")
        c.norm = Norm::Linf;
    else
        throw ConfigError("sampler.norm must be 'l2' or 'linf'");
    c.n_threads = static_cast<int>(get_number_or(j, "threads", 1));
    c.store_outputs = j.value("store_outputs", false);
    weight_name = j.value("nuisance_weight", "none");
    apply_nuisance_weighting(c, weight_name);
    c.validate();
    return c;
}

GridConfig parse_grid(const json& j, const std::string& section) {
    check_keys(j, section, {"min", "max", "points", "log", "values"});
    GridConfig g;
    if (j.contains("values")) {
        g.values = parse_vector(j["values"], section + ".values");
    } else {
        const double lo = get_number(j, section, "min");
        const double hi = get_number(j, section, "max");
        const auto n = static_cast<Index>(get_number_or(j, "points", 20));
        const bool log_scale = j.value("log", true);
        if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ConfigError(section + ": bad grid range");
        g.values.resize(n);
        for (Index i = 0; i < n; ++i) {
            const double f = static_cast<double>(i) / static_cast<double>(n - 1);
            g.values[i] = log_scale ? std::exp(std::log(hi) + f * (std::log(lo) - std::log(hi)))
                                    : hi + f * (lo - hi);
        }
    }
    if (g.values.size() == 0) throw ConfigError(section + ": empty grid");
    for (Index i = 0; i < g.values.size(); ++i) {
        if (!(g.values[i] > 0.0)) throw ConfigError(section + ": epsilons must be > 0");
        if (i > 0 && g.values[i] >= g.values[i - 1])
            throw ConfigError(section + ": grid must be strictly descending");
    }
    return g;
}

} // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    check_keys(root, origin, {"model", "data", "sampler", "evidence", "compare", "plot", "output"});

    RunConfig rc;
    if (root.contains("model")) rc.model = parse_model(root["model"]);
    if (root.contains("data")) rc.data = parse_data(root["data"]);
    if (root.contains("sampler")) rc.sampler = parse_sampler(root["sampler"], rc.nuisance_weight_name);
    if (root.contains("evidence")) {
        const json& j = root["evidence"];
        check_keys(j, "evidence", {"run", "grid"});
        EvidenceConfig ec;
        ec.run_path = j.value("run", "");
        if (ec.run_path.empty()) throw ConfigError("evidence.run: missing");
        if (!j.contains("grid")) throw ConfigError("evidence.grid: missing");
        ec.grid = parse_grid(j["grid"], "evidence.grid");
        rc.evidence = std::move(ec);
    }
    if (root.contains("compare")) {
        const json& j = root["compare"];
        check_keys(j, "compare", {"runs", "priors", "grid"});
        CompareConfig cc;
        if (!j.contains("runs") || !j["runs"].is_array() || j["runs"].size() < 2)
            throw ConfigError("compare.runs: need at least two run files");
        for (const auto& r : j["runs"]) cc.run_paths.push_back(r.get<std::string>());
        if (j.contains("priors")) cc.priors = parse_vector(j["priors"], "compare.priors");
        if (j.contains("grid")) cc.grid = parse_grid(j["grid"], "compare.grid");
        rc.compare = std::move(cc);
    }
    if (root.contains("plot")) {
        const json& j = root["plot"];
        check_keys(j, "plot", {"tables", "log_x", "log_y"});
        PlotConfig pc;
        if (!j.contains("tables") || !j["tables"].is_array() || j["tables"].empty())
            throw ConfigError("plot.tables: need at least one table file");
        for (const auto& t : j["tables"]) pc.tables.push_back(t.get<std::string>());
        pc.log_x = j.value("log_x", true);
        pc.log_y = j.value("log_y", false);
        rc.plot = std::move(pc);
    }
    if (root.contains("output")) {
        const json& j = root["output"];
        check_keys(j, "output", {"dir", "export_samples"});
        rc.output.dir = j.value("dir", ".");
        rc.output.export_samples = j.value("export_samples", true);
    }
    return rc;
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config_text(buf.str(), path);
}

namespace {

/// Toy linear map behind a ParamMap so it can appear with a fixed or free
/// parameter like the physics simulators.
class ToyMappedSimulator final : public ForwardSimulator {
public:
    explicit ToyMappedSimulator(ParamMap map) : map_(std::move(map)) {}
    Index n_params() const override { return map_.n_free(); }
    Index n_channels() const override { return 1; }
    Vector response(const ConstVectorRef& theta, const GroundMotion& motion) const override {
        return map_.assemble(theta)[0] * motion.accel;
    }

private:
    ParamMap map_;
};

std::vector<std::string> free_names_of(const ModelConfig& mc) {
    std::vector<std::string> names;
    names.reserve(mc.free.size());
    for (const auto& f : mc.free) names.push_back(f.name);
    return names;
}

} // namespace

std::shared_ptr<const ForwardSimulator> build_simulator(const ModelConfig& mc) {
    const auto free_names = free_names_of(mc);
    if (mc.name == "bilinear") {
        return std::make_shared<BilinearSimulator>(
            ParamMap(BilinearSimulator::canonical(), mc.fixed, free_names, mc.bind), mc.substeps);
    }
    if (mc.name == "masing") {
        if (mc.masses.size() != 3 || !(mc.masses.array() > 0.0).all())
            throw ConfigError("model.masses: need three positive story masses");
        return std::make_shared<MasingSimulator>(
            mc.masses, ParamMap(MasingSimulator::canonical(), mc.fixed, free_names, mc.bind),
            mc.substeps);
    }
    return std::make_shared<ToyMappedSimulator>(
        ParamMap({"theta"}, mc.fixed, free_names, mc.bind));
}

ModelClassSpec build_model(const ModelConfig& mc) {
    if (mc.free.empty()) throw ConfigError("model: at least one free parameter required");
    std::vector<PriorSpec> blocks;
    blocks.reserve(mc.free.size());
    for (const auto& f : mc.free) blocks.push_back(f.prior);
    std::shared_ptr<const ForwardSimulator> sim;
    try {
        sim = build_simulator(mc);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    try {
        return ModelClassSpec(mc.label, PriorSpec::composite(std::move(blocks)), std::move(sim),
                              mc.nuisance_mode, mc.fixed_sigma, mc.state_noise);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

Vector build_fixed_params(const ModelConfig& mc, std::vector<std::string>* names) {
    if (!mc.free.empty())
        throw ConfigError("model: this command requires all parameters fixed");
    static const std::vector<std::string> toy_canonical{"theta"};
    const auto& canon = mc.name == "bilinear"  ? BilinearSimulator::canonical()
                        : mc.name == "masing" ? MasingSimulator::canonical()
                                              : toy_canonical;
    if (names) *names = canon;
    try {
        const ParamMap map(canon, mc.fixed, {}, {});
        return map.assemble(Vector());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model.fixed: ") + e.what());
    }
}

GroundMotion build_motion(const MotionConfig& mc) {
    switch (mc.source) {
        case MotionConfig::Source::SurrogateLong:
            return surrogate_motion(SurrogateVariant::Long, mc.scale);
        case MotionConfig::Source::SurrogateShort:
            return surrogate_motion(SurrogateVariant::Short, mc.scale);
        default:
            return load_ground_motion(mc.path, mc.scale);
    }
}

void apply_nuisance_weighting(SubSimConfig& config, const std::string& name) {
    if (name == "none" || name.empty()) {
        config.log_nuisance_weight = nullptr;
        config.nuisance_weight_tag.clear();
        return;
    }
    if (name == "flat") {
        // flat prior on the variance: weight H^{-1/2} ~ sigma^2
        config.log_nuisance_weight = [](double s2) { return std::log(std::max(s2, 1e-300)); };
    } else if (name == "invgamma") {
        // inverse-gamma shape (a = 2, b = 1e-6) on the variance times H^{-1/2}
        config.log_nuisance_weight = [](double s2) {
            const double s = std::max(s2, 1e-300);
            return -2.0 * std::log(s) - 1e-6 / s;
        };
    } else {
        throw ConfigError("sampler.nuisance_weight must be none, flat or invgamma");
    }
    config.nuisance_weight_tag = name;
}

} // namespace subsim
