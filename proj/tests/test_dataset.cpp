#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "kanforge/dataset.hpp"
#include "kanforge/rng.hpp"
#include "kanforge/symbolic.hpp"

using namespace kf;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("normalizer maps range extremes to exactly 0 and 1") {
    const Normalizer n = Normalizer::paper_ranges();
    CHECK(n.to_unit(0, 0.15) == 0.0);
    CHECK(n.to_unit(0, 1.0) == 1.0);
    CHECK(n.to_unit(2, 0.0) == 0.0);
    CHECK(n.to_unit(2, 11.0) == 1.0);
    CHECK(n.to_unit(4, M_PI / 6.0) == 0.0);
    CHECK(n.to_unit(4, M_PI) == 1.0);
}

TEST_CASE("normalizer round-trips") {
    const Normalizer n = Normalizer::paper_ranges();
    Rng rng(1);
    for (int f = 0; f < kFeatureCount; ++f)
        for (int t = 0; t < 50; ++t) {
            const double raw = rng.uniform(n.lo[f], n.hi[f]);
            CHECK(n.from_unit(f, n.to_unit(f, raw)) == doctest::Approx(raw).epsilon(1e-12));
        }
}

TEST_CASE("domain transform maps range extremes to -1 and 1") {
    const FeatureTransform t = Normalizer::paper_ranges().domain_transform();
    const Normalizer n = Normalizer::paper_ranges();
    for (int f = 0; f < kFeatureCount; ++f) {
        CHECK(t.apply(f, n.lo[f]) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(t.apply(f, n.hi[f]) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("split produces the expected sizes and a partition") {
    const SplitIndices s = split(98, 0.9, 0);
    CHECK(s.train.size() == 88);
    CHECK(s.test.size() == 10);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 98);
    CHECK(*all.rbegin() == 97);

    const SplitIndices h = split(10, 0.5, 1);
    CHECK(h.train.size() == 5);
    CHECK(h.test.size() == 5);
}

TEST_CASE("split is deterministic and seed-sensitive") {
    const SplitIndices a = split(98, 0.9, 7);
    const SplitIndices b = split(98, 0.9, 7);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    const SplitIndices c = split(98, 0.9, 8);
    CHECK(a.test != c.test);
}

TEST_CASE("split partition property over random shapes") {
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 2 + rng.index(200);
        const double frac = 0.1 + 0.8 * rng.uniform();
        const auto train_n = static_cast<std::size_t>(std::llround(n * frac));
        if (train_n == 0 || train_n >= n) continue;
        const SplitIndices s = split(n, frac, t);
        CHECK(s.train.size() == train_n);
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        for (std::size_t i : s.test) CHECK(all.insert(i).second);
        CHECK(all.size() == n);
    }
}

TEST_CASE("split rejects degenerate requests") {
    CHECK_THROWS_AS(split(1, 0.9, 0), std::invalid_argument);
    CHECK_THROWS_AS(split(10, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(split(10, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(split(3, 0.999, 0), std::invalid_argument);  // empty test half
}

TEST_CASE("csv: empty data section loads as an empty list") {
    const std::string path = temp_file("kf_empty.csv");
    std::ofstream(path) << kCsvHeader << "\n";
    CHECK(load_csv(path).empty());
    fs::remove(path);
}

TEST_CASE("csv: one well-formed row round-trips exactly") {
    const std::string path = temp_file("kf_one.csv");
    std::ofstream(path) << kCsvHeader << "\n"
                        << "0.5,4,7.25,0.9,1.0471975511965976,123.456,0.789\n";
    const auto samples = load_csv(path);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].channel_height_mm == 0.5);
    CHECK(samples[0].overlap_mm == 4.0);
    CHECK(samples[0].voltage_kV == 7.25);
    CHECK(samples[0].gap_mm == 0.9);
    CHECK(samples[0].apex_angle_rad == doctest::Approx(M_PI / 3.0));
    CHECK(samples[0].pressure_pa == 123.456);
    CHECK(samples[0].flow_ml_min == 0.789);
    fs::remove(path);
}

TEST_CASE("csv: malformed rows are reported with their line number") {
    const std::string path = temp_file("kf_bad.csv");
    SUBCASE("wrong column count") {
        std::ofstream(path) << kCsvHeader << "\n"
                            << "0.5,4,7.25,0.9,1.0,123\n";
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("line 2"), CsvError);
    }
    SUBCASE("non-numeric cell names line and column") {
        std::ofstream(path) << kCsvHeader << "\n"
                            << "0.5,4,abc,0.9,1.0,123,0.7\n";
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("voltage_kV"), CsvError);
    }
    SUBCASE("missing header") {
        std::ofstream(path) << "a,b,c\n";
        CHECK_THROWS_AS(load_csv(path), CsvError);
    }
    SUBCASE("missing file names the path") {
        CHECK_THROWS_WITH_AS(load_csv("/nonexistent/x.csv"),
                             doctest::Contains("/nonexistent/x.csv"), CsvError);
    }
    fs::remove(path);
}

TEST_CASE("csv: comment lines are tolerated") {
    const std::string path = temp_file("kf_comment.csv");
    std::ofstream(path) << "# seed=5\n" << kCsvHeader << "\n"
                        << "1,0,5.5,0.3,3.141592653589793,10,1\n";
    CHECK(load_csv(path).size() == 1);
    fs::remove(path);
}

TEST_CASE("csv write/load round-trip is exact") {
    const auto samples = generate_synthetic(25, 3.0, 0.05, 11);
    const std::string path = temp_file("kf_rt.csv");
    write_csv(path, samples);
    const auto back = load_csv(path);
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].channel_height_mm == samples[i].channel_height_mm);
        CHECK(back[i].voltage_kV == samples[i].voltage_kV);
        CHECK(back[i].apex_angle_rad == samples[i].apex_angle_rad);
        CHECK(back[i].pressure_pa == samples[i].pressure_pa);
        CHECK(back[i].flow_ml_min == samples[i].flow_ml_min);
    }
    fs::remove(path);
}

TEST_CASE("zero-noise synthetic data satisfies the generating formulas exactly") {
    const auto samples = generate_synthetic(98, 0.0, 0.0, 0);
    REQUIRE(samples.size() == 98);
    const Normalizer norm = Normalizer::paper_ranges();
    for (const PumpSample& s : samples) {
        const auto unit = norm.to_unit(s.features());
        CHECK(s.pressure_pa == eval_paper_formula(PaperTarget::Y1, unit));
        CHECK(s.flow_ml_min == eval_paper_formula(PaperTarget::Y2, unit));
    }
}

TEST_CASE("synthetic categorical features stay within the tested levels") {
    const auto samples = generate_synthetic(200, 3.0, 0.05, 4);
    auto within = [](double v, std::span<const double> levels) {
        for (double l : levels)
            if (v == l) return true;
        return false;
    };
    for (const PumpSample& s : samples) {
        CHECK(within(s.channel_height_mm, channel_height_levels()));
        CHECK(within(s.overlap_mm, overlap_levels()));
        CHECK(within(s.gap_mm, gap_levels()));
        CHECK(within(s.apex_angle_rad, apex_angle_levels()));
        CHECK(s.voltage_kV >= 0.0);
        CHECK(s.voltage_kV <= 11.0);
        CHECK(s.pressure_pa >= 0.0);  // noisy targets are clamped
        CHECK(s.flow_ml_min >= 0.0);
    }
}

TEST_CASE("generator determinism: same seed gives byte-identical CSV") {
    const std::string p1 = temp_file("kf_gen1.csv"), p2 = temp_file("kf_gen2.csv");
    write_csv(p1, generate_synthetic(98, 3.0, 0.05, 0), {"seed=0"});
    write_csv(p2, generate_synthetic(98, 3.0, 0.05, 0), {"seed=0"});
    CHECK(slurp(p1) == slurp(p2));
    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("mse basics and the two-pass oracle") {
    const std::vector<double> a = {1.0, 2.0, 3.0};
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 3.0}) ==
          doctest::Approx(5.0));
    CHECK_THROWS_AS(mse(a, std::vector<double>{1.0}), std::invalid_argument);

    Rng rng(3);
    std::vector<double> p(10), t(10);
    for (int i = 0; i < 10; ++i) {
        p[i] = rng.uniform(-5.0, 5.0);
        t[i] = rng.uniform(-5.0, 5.0);
    }
    // two-pass oracle: compute residuals first, then average
    std::vector<double> r(10);
    for (int i = 0; i < 10; ++i) r[i] = p[i] - t[i];
    double acc = 0.0;
    for (double v : r) acc += v * v;
    CHECK(mse(p, t) == doctest::Approx(acc / 10.0).epsilon(1e-12));
}

TEST_CASE("training arrays use domain-normalized features and raw targets") {
    const auto samples = generate_synthetic(20, 0.0, 0.0, 2);
    const SplitIndices idx = split(samples.size(), 0.5, 2);
    const TrainingArrays arr = make_training_arrays(samples, idx.train, Target::Pressure);
    CHECK(arr.X.rows == idx.train.size());
    CHECK(arr.X.cols == 5);
    for (double v : arr.X.data) {
        CHECK(v >= -1.0 - 1e-12);
        CHECK(v <= 1.0 + 1e-12);
    }
    for (std::size_t r = 0; r < arr.X.rows; ++r)
        CHECK(arr.y[r] == samples[idx.train[r]].pressure_pa);
}
