#include "kanforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "kanforge/jsonio.hpp"
#include "kanforge/rng.hpp"
#include "kanforge/symbolic.hpp"

namespace kf {

namespace {
const double kHeights[] = {1.0, 0.5, 0.15};
const double kOverlaps[] = {8.0, 4.0, 0.0};
const double kGaps[] = {0.3, 0.6, 0.9, 1.2};
const double kAngles[] = {M_PI, M_PI / 2.0, M_PI / 3.0, M_PI / 6.0};
}  // namespace

std::span<const double> channel_height_levels() { return kHeights; }
std::span<const double> overlap_levels() { return kOverlaps; }
std::span<const double> gap_levels() { return kGaps; }
std::span<const double> apex_angle_levels() { return kAngles; }

Normalizer Normalizer::paper_ranges() {
    Normalizer n;
    n.lo = {0.15, 0.0, 0.0, 0.3, M_PI / 6.0};
    n.hi = {1.0, 8.0, 11.0, 1.2, M_PI};
    return n;
}

double Normalizer::to_unit(int feature, double raw) const {
    return (raw - lo[feature]) / (hi[feature] - lo[feature]);
}

double Normalizer::from_unit(int feature, double unit) const {
    return lo[feature] + unit * (hi[feature] - lo[feature]);
}

std::array<double, kFeatureCount> Normalizer::to_unit(
    const std::array<double, kFeatureCount>& raw) const {
    std::array<double, kFeatureCount> out;
    for (int f = 0; f < kFeatureCount; ++f) out[f] = to_unit(f, raw[f]);
    return out;
}

FeatureTransform Normalizer::domain_transform() const {
    FeatureTransform t;
    t.scale.resize(kFeatureCount);
    t.offset.resize(kFeatureCount);
    for (int f = 0; f < kFeatureCount; ++f) {
        t.scale[f] = 2.0 / (hi[f] - lo[f]);
        t.offset[f] = -1.0 - 2.0 * lo[f] / (hi[f] - lo[f]);
    }
    return t;
}

SplitIndices split(std::size_t n, double train_fraction, std::uint64_t seed) {
    require(n >= 2, "split: need at least two samples");
    require(train_fraction > 0.0 && train_fraction < 1.0,
            "split: train fraction must be in (0, 1)");
    const auto train_n = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * train_fraction));
    if (train_n == 0 || train_n == n)
        throw std::invalid_argument("split: fraction leaves an empty train or test set");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);

    SplitIndices out;
    out.seed = seed;
    out.train.assign(order.begin(), order.begin() + train_n);
    out.test.assign(order.begin() + train_n, order.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

namespace {

double parse_field(const std::string& cell, std::size_t line_no, int column) {
    const char* names[] = {"channel_height_mm", "overlap_mm",    "voltage_kV", "gap_mm",
                           "apex_angle_rad",    "pressure_pa",   "flow_ml_min"};
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0') {
        std::ostringstream os;
        os << "line " << line_no << ", column " << names[column] << ": cannot parse '" << cell
           << "' as a number";
        throw CsvError(os.str());
    }
    return v;
}

}  // namespace

std::vector<PumpSample> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open dataset file: " + path);

    std::vector<PumpSample> samples;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != kCsvHeader)
                throw CsvError("line " + std::to_string(line_no) +
                               ": expected header '" + kCsvHeader + "'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        if (cells.size() != 7)
            throw CsvError("line " + std::to_string(line_no) + ": expected 7 fields, found " +
                           std::to_string(cells.size()));
        PumpSample s;
        s.channel_height_mm = parse_field(cells[0], line_no, 0);
        s.overlap_mm = parse_field(cells[1], line_no, 1);
        s.voltage_kV = parse_field(cells[2], line_no, 2);
        s.gap_mm = parse_field(cells[3], line_no, 3);
        s.apex_angle_rad = parse_field(cells[4], line_no, 4);
        s.pressure_pa = parse_field(cells[5], line_no, 5);
        s.flow_ml_min = parse_field(cells[6], line_no, 6);
        samples.push_back(s);
    }
    if (!header_seen) throw CsvError("dataset file has no header: " + path);

    // categorical fields outside the tested levels are accepted with a warning
    auto off_levels = [](double v, std::span<const double> levels) {
        for (double l : levels)
            if (std::fabs(v - l) <= 1e-9) return false;
        return true;
    };
    std::size_t violations = 0;
    for (const PumpSample& s : samples)
        violations += off_levels(s.channel_height_mm, kHeights) ||
                      off_levels(s.overlap_mm, kOverlaps) || off_levels(s.gap_mm, kGaps) ||
                      off_levels(s.apex_angle_rad, kAngles);
    if (violations > 0)
        std::fprintf(stderr, "warning: %zu of %zu rows in %s have feature values outside the tested levels\n",
                     violations, samples.size(), path.c_str());
    return samples;
}

void write_csv(const std::string& path, const std::vector<PumpSample>& samples,
               const std::vector<std::string>& comments) {
    std::ofstream out(path);
    if (!out) throw CsvError("cannot write dataset file: " + path);
    for (const std::string& c : comments) out << "# " << c << "\n";
    out << kCsvHeader << "\n";
    for (const PumpSample& s : samples) {
        out << json::num(s.channel_height_mm) << ',' << json::num(s.overlap_mm) << ','
            << json::num(s.voltage_kV) << ',' << json::num(s.gap_mm) << ','
            << json::num(s.apex_angle_rad) << ',' << json::num(s.pressure_pa) << ','
            << json::num(s.flow_ml_min) << "\n";
    }
}

std::vector<PumpSample> generate_synthetic(std::size_t n, double sigma_pressure,
                                           double sigma_flow, std::uint64_t seed) {
    require(n >= 1, "generate_synthetic: n must be >= 1");
    require(sigma_pressure >= 0 && sigma_flow >= 0,
            "generate_synthetic: noise sigmas must be >= 0");
    const Normalizer norm = Normalizer::paper_ranges();
    Rng rng(seed);
    std::vector<PumpSample> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        PumpSample s;
        s.channel_height_mm = kHeights[rng.index(3)];
        s.overlap_mm = kOverlaps[rng.index(3)];
        s.voltage_kV = rng.uniform(0.0, 11.0);
        s.gap_mm = kGaps[rng.index(4)];
        s.apex_angle_rad = kAngles[rng.index(4)];
        const std::array<double, 5> unit = norm.to_unit(s.features());
        s.pressure_pa = eval_paper_formula(PaperTarget::Y1, unit);
        s.flow_ml_min = eval_paper_formula(PaperTarget::Y2, unit);
        // noise is drawn unconditionally so the feature stream is independent
        // of the sigma settings; zero-sigma targets stay exact
        const double noise_p = rng.gaussian();
        const double noise_f = rng.gaussian();
        if (sigma_pressure > 0) s.pressure_pa = std::max(0.0, s.pressure_pa + sigma_pressure * noise_p);
        if (sigma_flow > 0) s.flow_ml_min = std::max(0.0, s.flow_ml_min + sigma_flow * noise_f);
        samples.push_back(s);
    }
    return samples;
}

double mse(std::span<const double> pred, std::span<const double> truth) {
    require(pred.size() == truth.size() && !pred.empty(),
            "mse: sequences must have equal nonzero length");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        acc += e * e;
    }
    return acc / static_cast<double>(pred.size());
}

double target_value(const PumpSample& s, Target t) {
    return t == Target::Pressure ? s.pressure_pa : s.flow_ml_min;
}

const char* target_name(Target t) { return t == Target::Pressure ? "pressure" : "flow_rate"; }

Target parse_target(const std::string& name) {
    if (name == "pressure") return Target::Pressure;
    if (name == "flow" || name == "flow_rate") return Target::FlowRate;
    throw std::invalid_argument("unknown target '" + name + "' (expected pressure or flow_rate)");
}

TrainingArrays make_training_arrays(const std::vector<PumpSample>& samples,
                                    std::span<const std::size_t> indices, Target target) {
    require(!indices.empty(), "make_training_arrays: empty index list");
    const FeatureTransform t = Normalizer::paper_ranges().domain_transform();
    TrainingArrays out;
    out.X = Matrix(indices.size(), kFeatureCount);
    out.y.resize(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const PumpSample& s = samples.at(indices[r]);
        const auto raw = s.features();
        for (int f = 0; f < kFeatureCount; ++f) out.X(r, f) = t.apply(f, raw[f]);
        out.y[r] = target_value(s, target);
    }
    return out;
}

}  // namespace kf
