#ifndef SUBSIM_RUN_CONFIG_HPP
#define SUBSIM_RUN_CONFIG_HPP

#include "subsim/io.hpp"
#include "subsim/model.hpp"
#include "subsim/sampler.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace subsim {

/// Thrown on any schema violation; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FreeParamConfig {
    std::string name;
    PriorSpec prior; // one-dimensional block
};

struct ModelConfig {
    std::string name; // bilinear | masing | builtin-toy
    std::map<std::string, double> fixed;
    std::vector<FreeParamConfig> free;
    std::map<std::string, std::string> bind;
    Vector masses;         // masing story masses
    int substeps = 20;
    NuisanceMode nuisance_mode = NuisanceMode::LaplaceMarginalized;
    double fixed_sigma = 0.0;
    std::optional<Vector> state_noise;
    std::string label; // defaults to name
};

struct MotionConfig {
    enum class Source { File, SurrogateLong, SurrogateShort } source = Source::File;
    std::string path;
    double scale = 1.0;
};

struct SynthConfig {
    double noise_ratio = 0.05;
    std::uint64_t seed = 0;
};

struct DataConfig {
    std::optional<MotionConfig> motion;
    std::optional<std::string> dataset_path;
    std::optional<SynthConfig> synth;
};

struct GridConfig {
    Vector values; // descending epsilons
};

struct EvidenceConfig {
    std::string run_path;
    GridConfig grid;
};

struct CompareConfig {
    std::vector<std::string> run_paths;
    Vector priors; // empty = equal
    std::optional<GridConfig> grid;
};

struct PlotConfig {
    std::vector<std::string> tables;
    bool log_x = true;
    bool log_y = false;
};

struct OutputConfig {
    std::string dir = ".";
    bool export_samples = true;
};

/// Parsed and schema-checked configuration file. Sections are optional in
/// the file; each command demands the ones it needs.
struct RunConfig {
    std::optional<ModelConfig> model;
    std::optional<DataConfig> data;
    std::optional<SubSimConfig> sampler;
    std::string nuisance_weight_name = "none"; // none | flat | invgamma
    std::optional<EvidenceConfig> evidence;
    std::optional<CompareConfig> compare;
    std::optional<PlotConfig> plot;
    OutputConfig output;
};

RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin = "<config>");

/// Simulator over the free parameters declared in the model section.
std::shared_ptr<const ForwardSimulator> build_simulator(const ModelConfig& mc);

/// Full model class (requires at least one free parameter).
ModelClassSpec build_model(const ModelConfig& mc);

/// Canonical parameter values when the model section fixes everything.
Vector build_fixed_params(const ModelConfig& mc, std::vector<std::string>* names = nullptr);

GroundMotion build_motion(const MotionConfig& mc);

/// Installs the named variance-prior weighting on a sampler config.
void apply_nuisance_weighting(SubSimConfig& config, const std::string& name);

} // namespace subsim

#endif
