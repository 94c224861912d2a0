#ifndef SUBSIM_IO_HPP
#define SUBSIM_IO_HPP

#include "subsim/dataset.hpp"
#include "subsim/evidence.hpp"
#include "subsim/ground_motion.hpp"
#include "subsim/model.hpp"
#include "subsim/sampler.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace subsim {

inline constexpr const char* kCodeVersion = "0.1.0";

/// Parses a two-column (time, acceleration) text record; comma or whitespace
/// separated, '#' comments. The time column must be uniform to 1e-6
/// relative; acceleration is multiplied by scale.
GroundMotion load_ground_motion(const std::string& path, double scale = 1.0);

/// Bundled synthetic records (seeded filtered white noise) for running the
/// built-in studies without external accelerogram files.
enum class SurrogateVariant {
    Long,  // 40 s at 60 Hz, amplitude like a strong historical record
    Short, // 10 s at 50 Hz, amplitude like a severe near-field record
};
GroundMotion surrogate_motion(SurrogateVariant variant, double scale = 1.0);

/// Noise level giving the requested RMS noise-to-signal ratio.
double rms_noise_sigma(const ConstVectorRef& signal, double ratio);

struct SynthResult {
    Dataset data;
    double sigma = 0.0;
};

/// Deterministic response at theta_true plus Gaussian measurement noise at
/// the requested noise-to-signal ratio (ratio 0 = exact response).
SynthResult synth_dataset(const ForwardSimulator& sim, const ConstVectorRef& theta_true,
                          const GroundMotion& motion, double ratio, std::uint64_t seed);
SynthResult synth_dataset(const ModelClassSpec& model, const ConstVectorRef& theta_true,
                          const GroundMotion& motion, double ratio, std::uint64_t seed);

void save_dataset(const Dataset& data, const std::string& path, double sigma = 0.0,
                  std::uint64_t seed = 0);
Dataset load_dataset(const std::string& path);

/// Binary run container with version tag and checksum; round-trips
/// bit-exactly, including all sample vectors.
std::vector<std::uint8_t> serialize_run(const SubSimRun& run);
SubSimRun deserialize_run(const std::vector<std::uint8_t>& bytes);
void save_run(const SubSimRun& run, const std::string& path);
SubSimRun load_run(const std::string& path);

/// Tabular sample export: level, chain, parameters, discrepancy, sigma_v.
void export_samples_tsv(const SubSimRun& run, const std::vector<std::string>& param_names,
                        const std::string& path);

void export_evidence_tsv(const EvidenceCurve& curve, const std::string& path);
void export_compare_tsv(const ModelComparisonReport& report, const std::string& path);
void export_posterior_vs_eps_tsv(const ModelComparisonReport& report, const std::string& path);

/// Key-value manifest; the one output that carries timestamps.
void write_manifest(const std::vector<std::pair<std::string, std::string>>& entries,
                    const std::string& path);

/// Generic TSV writer: equal-length columns under a header row.
void write_tsv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Vector>& columns);

std::string hex_digest(std::uint64_t digest);

} // namespace subsim

#endif
