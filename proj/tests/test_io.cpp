#include "subsim/io.hpp"
#include "subsim/models_builtin.hpp"

#include "support.hpp"
#include "toy_fixture.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace subsim;
using testsup::ToyProblem;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("subsim_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
}

} // namespace

TEST_CASE("load_ground_motion: parsing, scaling, validation") {
    TempDir tmp;
    const std::string path = tmp.file("motion.txt");
    write_text(path, "# demo record\n0.0, 0.1\n0.02, 0.2\n0.04 0.3\n\n");
    const GroundMotion gm = load_ground_motion(path);
    CHECK(gm.dt == doctest::Approx(0.02));
    REQUIRE(gm.n_samples() == 3);
    CHECK(gm.accel[0] == doctest::Approx(0.1));
    CHECK(gm.accel[2] == doctest::Approx(0.3));

    const GroundMotion scaled = load_ground_motion(path, 0.1);
    CHECK(scaled.accel[1] == doctest::Approx(0.02));

    // jittered time column
    write_text(path, "0.0 0.1\n0.02 0.2\n0.0402 0.3\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_ground_motion(path)),
                         doctest::Contains("non-uniform"), std::runtime_error);

    // non-numeric rows carry the line number
    write_text(path, "0.0 0.1\n0.02 oops\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(load_ground_motion(path)), doctest::Contains(":2"),
                         std::runtime_error);

    write_text(path, "0.0 0.1 9\n0.02 0.2 9\n");
    CHECK_THROWS(static_cast<void>(load_ground_motion(path)));
}

TEST_CASE("rms_noise_sigma: values and errors") {
    Vector s(2);
    s << 3.0, 4.0;
    CHECK(rms_noise_sigma(s, 0.05) == doctest::Approx(0.05 * std::sqrt(12.5)));
    CHECK(rms_noise_sigma(Vector::Constant(10, -2.0), 0.3) == doctest::Approx(0.6));
    CHECK_THROWS(rms_noise_sigma(Vector::Zero(5), 0.05));
    CHECK_THROWS(rms_noise_sigma(s, 0.0));
}

TEST_CASE("synth_dataset: exactness, determinism, moments") {
    const GroundMotion motion(0.01, Vector::LinSpaced(2400, -1.0, 1.0));
    const ModelClassSpec toy = toy_model_class(0.0, 2.0, 0.1);
    const Vector theta = Vector::Constant(1, 1.3);

    const SynthResult exact = synth_dataset(toy, theta, motion, 0.0, 1);
    CHECK((exact.data.observed - 1.3 * motion.accel).norm() == 0.0);
    CHECK(exact.sigma == 0.0);

    const SynthResult a = synth_dataset(toy, theta, motion, 0.05, 7);
    const SynthResult b = synth_dataset(toy, theta, motion, 0.05, 7);
    CHECK((a.data.observed - b.data.observed).norm() == 0.0);
    CHECK(a.data.digest() == b.data.digest());

    const Vector resid = a.data.observed - 1.3 * motion.accel;
    const double sd = std::sqrt(resid.squaredNorm() / 2400.0);
    CHECK(sd == doctest::Approx(a.sigma).epsilon(0.03));
}

TEST_CASE("dataset save/load round-trips bit-exactly") {
    TempDir tmp;
    const GroundMotion motion(1.0 / 60.0, Vector::Random(100) * 0.37);
    const ModelClassSpec toy = toy_model_class(0.0, 2.0, 0.1);
    const SynthResult synth = synth_dataset(toy, Vector::Constant(1, 0.77), motion, 0.05, 3);

    const std::string path = tmp.file("dataset.tsv");
    save_dataset(synth.data, path, synth.sigma, 3);
    const Dataset loaded = load_dataset(path);
    CHECK(loaded.input.dt == synth.data.input.dt);
    CHECK((loaded.input.accel - synth.data.input.accel).norm() == 0.0);
    CHECK((loaded.observed - synth.data.observed).norm() == 0.0);
    CHECK(loaded.digest() == synth.data.digest());
}

TEST_CASE("dataset digest tracks content") {
    const GroundMotion motion(0.02, Vector::LinSpaced(50, -1.0, 1.0));
    Dataset data(motion, Vector::LinSpaced(50, 0.0, 1.0), 1);
    const auto base = data.digest();

    Dataset obs_changed = data;
    obs_changed.observed[17] = std::nextafter(obs_changed.observed[17], 1e9);
    CHECK(obs_changed.digest() != base);

    Dataset input_changed = data;
    input_changed.input.accel[3] += 1e-12;
    CHECK(input_changed.digest() != base);

    Dataset dt_changed = data;
    dt_changed.input.dt = std::nextafter(dt_changed.input.dt, 1.0);
    CHECK(dt_changed.digest() != base);

    CHECK(Dataset(data).digest() == base);
}

TEST_CASE("run container: round trip, checksum, truncation") {
    // empty run
    SubSimRun empty;
    empty.model_name = "none";
    const auto bytes_empty = serialize_run(empty);
    CHECK(deserialize_run(bytes_empty).model_name == "none");

    // real run with samples round-trips bit-exactly
    const ToyProblem toy = ToyProblem::make();
    SubSimConfig config;
    config.n_per_level = 300;
    config.p0 = 0.2;
    config.max_levels = 3;
    config.master_seed = 11;
    config.eps_target = 1e-9; // never reached; stops by level budget
    const SubSimRun run = run_abc_subsim(toy.model, toy.data, config);

    const auto bytes = serialize_run(run);
    const SubSimRun loaded = deserialize_run(bytes);
    CHECK(serialize_run(loaded) == bytes);
    CHECK(loaded.levels.size() == run.levels.size());
    CHECK(loaded.levels.back().samples.back().theta[0] ==
          run.levels.back().samples.back().theta[0]);
    CHECK(loaded.config.eps_target.value() == 1e-9);

    // flip one payload byte: checksum must catch it
    auto corrupted = bytes;
    corrupted[corrupted.size() / 2] ^= 0x20;
    CHECK_THROWS_WITH_AS(static_cast<void>(deserialize_run(corrupted)),
                         doctest::Contains("checksum"), std::runtime_error);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 9);
    CHECK_THROWS(static_cast<void>(deserialize_run(truncated)));

    // file round trip
    TempDir tmp;
    save_run(run, tmp.file("run.bin"));
    CHECK(serialize_run(load_run(tmp.file("run.bin"))) == bytes);
}

TEST_CASE("surrogate records are deterministic and distinct") {
    const GroundMotion a = surrogate_motion(SurrogateVariant::Long, 0.1);
    const GroundMotion b = surrogate_motion(SurrogateVariant::Long, 0.1);
    CHECK((a.accel - b.accel).norm() == 0.0);
    CHECK(a.n_samples() == 2400);
    CHECK(a.dt == doctest::Approx(1.0 / 60.0));

    const GroundMotion c = surrogate_motion(SurrogateVariant::Short);
    CHECK(c.n_samples() == 500);
    CHECK(c.dt == doctest::Approx(0.02));
}

TEST_CASE("sample export and manifest formatting") {
    TempDir tmp;
    const ToyProblem toy = ToyProblem::make();
    SubSimConfig config;
    config.n_per_level = 100;
    config.p0 = 0.2;
    config.max_levels = 2;
    const SubSimRun run = run_abc_subsim(toy.model, toy.data, config);

    const std::string path = tmp.file("samples.tsv");
    export_samples_tsv(run, {"theta"}, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "level\tchain\ttheta\tdiscrepancy\tsigma_v");
    Index rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 200);

    write_manifest({{"a", "1"}, {"b", "two"}}, tmp.file("manifest.txt"));
    std::ifstream min(tmp.file("manifest.txt"));
    std::string l1, l2;
    std::getline(min, l1);
    std::getline(min, l2);
    CHECK(l1 == "a = 1");
    CHECK(l2 == "b = two");
}
