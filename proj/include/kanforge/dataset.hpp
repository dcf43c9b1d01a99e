#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "kanforge/common.hpp"
#include "kanforge/kan.hpp"

namespace kf {

// One measured (or generated) pump operating point. Feature order follows
// the X1..X5 schema: channel height, electrode overlap, voltage, electrode
// gap, apex angle.
struct PumpSample {
    double channel_height_mm = 0.0;
    double overlap_mm = 0.0;
    double voltage_kV = 0.0;
    double gap_mm = 0.0;
    double apex_angle_rad = 0.0;
    double pressure_pa = 0.0;
    double flow_ml_min = 0.0;

    std::array<double, 5> features() const {
        return {channel_height_mm, overlap_mm, voltage_kV, gap_mm, apex_angle_rad};
    }
};

inline constexpr int kFeatureCount = 5;
inline constexpr const char* kCsvHeader =
    "channel_height_mm,overlap_mm,voltage_kV,gap_mm,apex_angle_rad,pressure_pa,flow_ml_min";

// tested factor levels used by the synthetic generator
std::span<const double> channel_height_levels();
std::span<const double> overlap_levels();
std::span<const double> gap_levels();
std::span<const double> apex_angle_levels();

// Min-max scaling of each feature into [0,1] using the tested parameter
// ranges (heights 0.15-1 mm, overlap 0-8 mm, voltage 0-11 kV, gap 0.3-1.2 mm,
// apex angle pi/6-pi).
struct Normalizer {
    std::array<double, kFeatureCount> lo{};
    std::array<double, kFeatureCount> hi{};

    static Normalizer paper_ranges();

    double to_unit(int feature, double raw) const;
    double from_unit(int feature, double unit) const;
    std::array<double, kFeatureCount> to_unit(const std::array<double, kFeatureCount>& raw) const;

    // affine map raw -> [-1, 1], the spline domain used by KAN models
    FeatureTransform domain_transform() const;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

// Deterministic Fisher-Yates split; train count = round(n * train_fraction).
SplitIndices split(std::size_t n, double train_fraction, std::uint64_t seed);

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Reads the pump CSV schema. Lines starting with '#' are comments. Malformed
// rows raise CsvError naming the line number.
std::vector<PumpSample> load_csv(const std::string& path);

// Writes samples in the same schema with 17 significant digits, optionally
// preceded by '#'-prefixed comment lines.
void write_csv(const std::string& path, const std::vector<PumpSample>& samples,
               const std::vector<std::string>& comments = {});

// Draws features from the tested levels (voltage uniform on [0, 11] kV),
// evaluates the built-in closed-form targets on normalized features, and adds
// per-target Gaussian noise. Noisy targets are clamped at zero; zero-sigma
// targets are the exact formula values.
std::vector<PumpSample> generate_synthetic(std::size_t n, double sigma_pressure,
                                           double sigma_flow, std::uint64_t seed);

double mse(std::span<const double> pred, std::span<const double> truth);

enum class Target { Pressure, FlowRate };

double target_value(const PumpSample& s, Target t);
const char* target_name(Target t);
Target parse_target(const std::string& name);

// Feature matrix in the spline domain [-1,1] plus the target column.
struct TrainingArrays {
    Matrix X;                 // n x 5, domain-normalized
    std::vector<double> y;    // raw target units
};

TrainingArrays make_training_arrays(const std::vector<PumpSample>& samples,
                                    std::span<const std::size_t> indices, Target target);

}  // namespace kf
