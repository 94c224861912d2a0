#include "subsim/io.hpp"

#include "subsim/detail/hash.hpp"
#include "subsim/rng.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace subsim {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double parse_double(const std::string& field, const std::string& path, Index line_no) {
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0' || !std::isfinite(v))
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-numeric field '" +
                                 field + "'");
    return v;
}

// ---------------------------------------------------------------- byte io

class ByteWriter {
public:
    template <class T>
    void pod(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void f64(double v) { pod(v); }
    void i64(std::int64_t v) { pod(v); }
    void u64(std::uint64_t v) { pod(v); }
    void u8(std::uint8_t v) { pod(v); }
    void vec(const Vector& v) {
        i64(v.size());
        const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
        buf_.insert(buf_.end(), p, p + sizeof(double) * static_cast<std::size_t>(v.size()));
    }
    void str(const std::string& s) {
        i64(static_cast<std::int64_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t n) : data_(data), n_(n) {}
    template <class T>
    T pod() {
        static_assert(std::is_trivially_copyable_v<T>);
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    double f64() { return pod<double>(); }
    std::int64_t i64() { return pod<std::int64_t>(); }
    std::uint64_t u64() { return pod<std::uint64_t>(); }
    std::uint8_t u8() { return pod<std::uint8_t>(); }
    Vector vec() {
        const auto n = i64();
        if (n < 0) throw std::runtime_error("run file: negative vector length");
        need(sizeof(double) * static_cast<std::size_t>(n));
        Vector v(n);
        std::memcpy(v.data(), data_ + pos_, sizeof(double) * static_cast<std::size_t>(n));
        pos_ += sizeof(double) * static_cast<std::size_t>(n);
        return v;
    }
    std::string str() {
        const auto n = i64();
        if (n < 0) throw std::runtime_error("run file: negative string length");
        need(static_cast<std::size_t>(n));
        std::string s(reinterpret_cast<const char*>(data_ + pos_), static_cast<std::size_t>(n));
        pos_ += static_cast<std::size_t>(n);
        return s;
    }
    bool exhausted() const { return pos_ == n_; }

private:
    void need(std::size_t k) const {
        if (pos_ + k > n_) throw std::runtime_error("run file: truncated");
    }
    const std::uint8_t* data_;
    std::size_t n_;
    std::size_t pos_ = 0;
};

constexpr char kRunMagic[8] = {'S', 'S', 'A', 'B', 'C', 'R', 'N', '1'};

void write_file(const std::string& path, const void* data, std::size_t n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

} // namespace

// ------------------------------------------------------------ ground motion

GroundMotion load_ground_motion(const std::string& path, double scale) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ground-motion file: " + path);

    std::vector<double> times, accels;
    std::string line;
    Index line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected two columns (time, acceleration)");
        times.push_back(parse_double(fields[0], path, line_no));
        accels.push_back(parse_double(fields[1], path, line_no));
    }
    if (times.size() < 2)
        throw std::runtime_error(path + ": need at least two samples");

    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw std::runtime_error(path + ": time column must be increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double step = times[i] - times[i - 1];
        if (std::abs(step - dt) > 1e-6 * dt)
            throw std::runtime_error(path + ": non-uniform sampling at row " + std::to_string(i + 1) +
                                     " (dt " + format_double(step) + " vs " + format_double(dt) + ")");
    }
    Vector accel(static_cast<Index>(accels.size()));
    for (Index i = 0; i < accel.size(); ++i)
        accel[i] = accels[static_cast<std::size_t>(i)] * scale;
    return GroundMotion(dt, std::move(accel), scale);
}

namespace {

// Random-phase harmonic series shaped by a ground-motion-like spectrum
// (band-pass: oscillator resonance times a high-pass corner that bounds the
// displacement content) under a build-up/decay envelope. Deterministic per
// variant: the record is part of the artifact, not of any seeded experiment.
GroundMotion make_surrogate(double dt, Index n, double f_lo, double f_hi, double f_peak,
                            double damping, double f_corner, double peak_accel,
                            std::uint64_t seed) {
    RngStream rng(seed, 0x5EEDu, 0, 0);
    const int n_comp = 96;
    const double duration = dt * static_cast<double>(n);

    std::vector<double> w(n_comp), amp(n_comp), phase(n_comp);
    const double lf_lo = std::log(f_lo), lf_hi = std::log(f_hi);
    for (int c = 0; c < n_comp; ++c) {
        const double f = std::exp(lf_lo + (lf_hi - lf_lo) * (c + 0.5) / n_comp);
        w[c] = 2.0 * std::numbers::pi * f;
        const double r = f / f_peak;
        const double h2 = (1.0 + 4.0 * damping * damping * r * r) /
                          ((1.0 - r * r) * (1.0 - r * r) + 4.0 * damping * damping * r * r);
        const double rc = f / f_corner;
        const double hp2 = rc * rc * rc * rc /
                           ((1.0 - rc * rc) * (1.0 - rc * rc) + 1.96 * rc * rc);
        amp[c] = std::sqrt(h2 * hp2) * (0.7 + 0.6 * rng.uniform01());
        phase[c] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }

    Vector accel(n);
    double peak = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double x = t / duration;
        // smooth rise to the strong phase, exponential tail
        const double envelope = std::pow(x / 0.15, 2.0) / (1.0 + std::pow(x / 0.15, 2.0)) *
                                std::exp(-3.0 * std::max(0.0, x - 0.45));
        double s = 0.0;
        for (int c = 0; c < n_comp; ++c) s += amp[c] * std::sin(w[c] * t + phase[c]);
        accel[i] = envelope * s;
        peak = std::max(peak, std::abs(accel[i]));
    }
    accel *= peak_accel / peak;
    return GroundMotion(dt, std::move(accel), 1.0);
}

} // namespace

GroundMotion surrogate_motion(SurrogateVariant variant, double scale) {
    GroundMotion gm = variant == SurrogateVariant::Long
                          ? make_surrogate(1.0 / 60.0, 2400, 0.08, 6.0, 1.2, 0.55, 1.0, 3.2,
                                           0x1940E1C3ull)
                          : make_surrogate(0.02, 500, 0.4, 12.0, 2.6, 0.5, 1.0, 3.7,
                                           0x1994517Eull);
    gm.accel *= scale;
    gm.scale = scale;
    return gm;
}

// ------------------------------------------------------------------- noise

double rms_noise_sigma(const ConstVectorRef& signal, double ratio) {
    if (signal.size() == 0) throw std::invalid_argument("rms_noise_sigma: empty signal");
    if (!(ratio > 0.0)) throw std::invalid_argument("rms_noise_sigma: ratio must be > 0");
    const double rms = std::sqrt(signal.squaredNorm() / static_cast<double>(signal.size()));
    if (rms == 0.0) throw std::invalid_argument("rms_noise_sigma: all-zero signal");
    return ratio * rms;
}

SynthResult synth_dataset(const ForwardSimulator& sim, const ConstVectorRef& theta_true,
                          const GroundMotion& motion, double ratio, std::uint64_t seed) {
    Vector response = sim.response(theta_true, motion);
    SynthResult out;
    out.sigma = ratio > 0.0 ? rms_noise_sigma(response, ratio) : 0.0;
    if (out.sigma > 0.0) {
        RngStream rng(seed, 0xD474u, 0, 0);
        for (Index i = 0; i < response.size(); ++i) response[i] += out.sigma * rng.normal();
    }
    out.data = Dataset(motion, std::move(response), sim.n_channels());
    return out;
}

SynthResult synth_dataset(const ModelClassSpec& model, const ConstVectorRef& theta_true,
                          const GroundMotion& motion, double ratio, std::uint64_t seed) {
    return synth_dataset(model.forward(), theta_true, motion, ratio, seed);
}

// ------------------------------------------------------------ dataset file

void save_dataset(const Dataset& data, const std::string& path, double sigma, std::uint64_t seed) {
    std::ostringstream out;
    out << "# subsim-dataset v1\n";
    out << "# dt=" << format_double(data.input.dt) << " n_steps=" << data.n_steps
        << " n_channels=" << data.n_channels << " scale=" << format_double(data.input.scale)
        << " sigma=" << format_double(sigma) << " seed=" << seed << "\n";
    out << "# columns: time accel obs_1..obs_" << data.n_channels << "\n";
    for (Index nstep = 0; nstep < data.n_steps; ++nstep) {
        out << format_double(static_cast<double>(nstep) * data.input.dt) << '\t'
            << format_double(data.input.accel[nstep]);
        for (Index c = 0; c < data.n_channels; ++c)
            out << '\t' << format_double(data.observed[nstep * data.n_channels + c]);
        out << '\n';
    }
    const std::string s = out.str();
    write_file(path, s.data(), s.size());
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# subsim-dataset v1", 0) != 0)
        throw std::runtime_error(path + ": not a subsim dataset file");
    if (!std::getline(in, line) || line.rfind("# dt=", 0) != 0)
        throw std::runtime_error(path + ": missing dataset header");

    double dt = 0.0, scale = 1.0;
    Index n_steps = 0, n_channels = 0;
    {
        std::istringstream hs(line.substr(1));
        std::string tok;
        while (hs >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "dt") dt = std::stod(val);
            else if (key == "n_steps") n_steps = std::stoll(val);
            else if (key == "n_channels") n_channels = std::stoll(val);
            else if (key == "scale") scale = std::stod(val);
        }
    }
    if (dt <= 0.0 || n_steps <= 0 || n_channels <= 0)
        throw std::runtime_error(path + ": bad dataset header");

    Vector accel(n_steps), observed(n_steps * n_channels);
    Index row = 0, line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (static_cast<Index>(fields.size()) != 2 + n_channels)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": wrong column count");
        if (row >= n_steps) throw std::runtime_error(path + ": more rows than n_steps");
        accel[row] = parse_double(fields[1], path, line_no);
        for (Index c = 0; c < n_channels; ++c)
            observed[row * n_channels + c] =
                parse_double(fields[static_cast<std::size_t>(2 + c)], path, line_no);
        ++row;
    }
    if (row != n_steps) throw std::runtime_error(path + ": fewer rows than n_steps");
    GroundMotion gm(dt, std::move(accel), scale);
    return Dataset(std::move(gm), std::move(observed), n_channels);
}

// --------------------------------------------------------------- run file

std::vector<std::uint8_t> serialize_run(const SubSimRun& run) {
    ByteWriter w;
    w.str(run.model_name);
    const SubSimConfig& c = run.config;
    w.i64(c.n_per_level);
    w.f64(c.p0);
    w.f64(c.target_accept);
    w.f64(c.adapt_prob);
    w.i64(c.max_levels);
    w.u8(c.eps_target ? 1 : 0);
    w.f64(c.eps_target ? *c.eps_target : 0.0);
    w.u64(c.master_seed);
    w.u8(c.norm == Norm::L2 ? 0 : 1);
    w.i64(c.n_threads);
    w.u8(c.store_outputs ? 1 : 0);
    w.str(c.nuisance_weight_tag);
    w.u8(static_cast<std::uint8_t>(run.stop_reason));
    w.u64(run.dataset_digest);
    w.i64(run.n_obs);
    w.i64(run.total_simulator_calls);

    w.i64(static_cast<std::int64_t>(run.levels.size()));
    for (const auto& level : run.levels) {
        w.i64(level.level_index);
        w.f64(level.tolerance);
        w.f64(level.mean_accept);
        w.vec(level.proposal_scales);
        w.i64(static_cast<std::int64_t>(level.samples.size()));
        for (std::size_t i = 0; i < level.samples.size(); ++i) {
            const auto& s = level.samples[i];
            w.i64(level.chain_id[i]);
            w.vec(s.theta);
            w.vec(s.states);
            w.vec(s.output);
            w.f64(s.discrepancy);
            w.f64(s.sigma2);
        }
    }

    std::vector<std::uint8_t> payload = w.take();
    detail::Fnv1a h;
    h.update(payload.data(), payload.size());

    std::vector<std::uint8_t> out;
    out.reserve(sizeof(kRunMagic) + payload.size() + 8);
    out.insert(out.end(), kRunMagic, kRunMagic + sizeof(kRunMagic));
    out.insert(out.end(), payload.begin(), payload.end());
    const std::uint64_t digest = h.digest();
    const auto* dp = reinterpret_cast<const std::uint8_t*>(&digest);
    out.insert(out.end(), dp, dp + 8);
    return out;
}

SubSimRun deserialize_run(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < sizeof(kRunMagic) + 8) throw std::runtime_error("run file: truncated");
    if (std::memcmp(bytes.data(), kRunMagic, sizeof(kRunMagic)) != 0)
        throw std::runtime_error("run file: bad magic or unsupported version");

    const std::size_t payload_len = bytes.size() - sizeof(kRunMagic) - 8;
    const std::uint8_t* payload = bytes.data() + sizeof(kRunMagic);
    detail::Fnv1a h;
    h.update(payload, payload_len);
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
    if (stored != h.digest()) throw std::runtime_error("run file: checksum mismatch");

    ByteReader r(payload, payload_len);
    SubSimRun run;
    run.model_name = r.str();
    SubSimConfig& c = run.config;
    c.n_per_level = r.i64();
    c.p0 = r.f64();
    c.target_accept = r.f64();
    c.adapt_prob = r.f64();
    c.max_levels = r.i64();
    const bool has_eps = r.u8() != 0;
    const double eps = r.f64();
    if (has_eps) c.eps_target = eps;
    c.master_seed = r.u64();
    c.norm = r.u8() == 0 ? Norm::L2 : Norm::Linf;
    c.n_threads = static_cast<int>(r.i64());
    c.store_outputs = r.u8() != 0;
    c.nuisance_weight_tag = r.str();
    run.stop_reason = static_cast<StopReason>(r.u8());
    run.dataset_digest = r.u64();
    run.n_obs = r.i64();
    run.total_simulator_calls = r.i64();

    const auto n_levels = r.i64();
    if (n_levels < 0) throw std::runtime_error("run file: negative level count");
    run.levels.resize(static_cast<std::size_t>(n_levels));
    for (auto& level : run.levels) {
        level.level_index = r.i64();
        level.tolerance = r.f64();
        level.mean_accept = r.f64();
        level.proposal_scales = r.vec();
        const auto n_samples = r.i64();
        if (n_samples < 0) throw std::runtime_error("run file: negative sample count");
        level.samples.resize(static_cast<std::size_t>(n_samples));
        level.chain_id.resize(static_cast<std::size_t>(n_samples));
        for (std::size_t i = 0; i < level.samples.size(); ++i) {
            level.chain_id[i] = r.i64();
            auto& s = level.samples[i];
            s.theta = r.vec();
            s.states = r.vec();
            s.output = r.vec();
            s.discrepancy = r.f64();
            s.sigma2 = r.f64();
        }
    }
    if (!r.exhausted()) throw std::runtime_error("run file: trailing bytes");
    return run;
}

void save_run(const SubSimRun& run, const std::string& path) {
    const auto bytes = serialize_run(run);
    write_file(path, bytes.data(), bytes.size());
}

SubSimRun load_run(const std::string& path) { return deserialize_run(read_file(path)); }

// ----------------------------------------------------------------- exports

void export_samples_tsv(const SubSimRun& run, const std::vector<std::string>& param_names,
                        const std::string& path) {
    std::ostringstream out;
    out << "level\tchain";
    const Index n_params = run.levels.empty() || run.levels.front().samples.empty()
                               ? 0
                               : run.levels.front().samples.front().theta.size();
    for (Index k = 0; k < n_params; ++k)
        out << '\t'
            << (k < static_cast<Index>(param_names.size())
                    ? param_names[static_cast<std::size_t>(k)]
                    : "theta_" + std::to_string(k));
    out << "\tdiscrepancy\tsigma_v\n";
    for (const auto& level : run.levels) {
        for (std::size_t i = 0; i < level.samples.size(); ++i) {
            const auto& s = level.samples[i];
            out << level.level_index << '\t' << level.chain_id[i];
            for (Index k = 0; k < s.theta.size(); ++k) out << '\t' << format_double(s.theta[k]);
            out << '\t' << format_double(s.discrepancy) << '\t'
                << format_double(std::sqrt(s.sigma2)) << '\n';
        }
    }
    const std::string s = out.str();
    write_file(path, s.data(), s.size());
}

void export_evidence_tsv(const EvidenceCurve& curve, const std::string& path) {
    std::ostringstream out;
    out << "epsilon\tprob\tlog_evidence\n";
    for (const auto& pt : curve.points)
        out << format_double(pt.epsilon) << '\t' << format_double(pt.prob) << '\t'
            << format_double(pt.log_evidence) << '\n';
    const std::string s = out.str();
    write_file(path, s.data(), s.size());
}

void export_compare_tsv(const ModelComparisonReport& report, const std::string& path) {
    std::ostringstream out;
    out << "model\tfinal_tolerance\tlevels\tlog_evidence\tposterior_prob\n";
    for (const auto& m : report.models)
        out << m.name << '\t' << format_double(m.final_tolerance) << '\t' << m.n_levels << '\t'
            << format_double(m.log_evidence) << '\t' << format_double(m.posterior_prob) << '\n';
    const std::string s = out.str();
    write_file(path, s.data(), s.size());
}

void export_posterior_vs_eps_tsv(const ModelComparisonReport& report, const std::string& path) {
    std::ostringstream out;
    out << "epsilon";
    for (const auto& m : report.models) out << '\t' << m.name;
    out << '\n';
    for (Index g = 0; g < report.eps_grid.size(); ++g) {
        if (std::isnan(report.posterior_vs_eps(g, 0))) continue; // uncovered grid point
        out << format_double(report.eps_grid[g]);
        for (Index l = 0; l < report.posterior_vs_eps.cols(); ++l)
            out << '\t' << format_double(report.posterior_vs_eps(g, l));
        out << '\n';
    }
    const std::string s = out.str();
    write_file(path, s.data(), s.size());
}

void write_manifest(const std::vector<std::pair<std::string, std::string>>& entries,
                    const std::string& path) {
    std::ostringstream out;
    for (const auto& [key, value] : entries) out << key << " = " << value << '\n';
    const std::string s = out.str();
    write_file(path, s.data(), s.size());
}

void write_tsv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Vector>& columns) {
    if (header.size() != columns.size())
        throw std::invalid_argument("write_tsv: header/column count mismatch");
    std::ostringstream out;
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "\t" : "") << header[c];
    out << '\n';
    const Index rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& col : columns)
        if (col.size() != rows) throw std::invalid_argument("write_tsv: ragged columns");
    for (Index i = 0; i < rows; ++i) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << (c ? "\t" : "") << format_double(columns[c][i]);
        out << '\n';
    }
    const std::string s = out.str();
    write_file(path, s.data(), s.size());
}

std::string hex_digest(std::uint64_t digest) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

} // namespace subsim
