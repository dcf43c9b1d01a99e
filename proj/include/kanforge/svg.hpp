#pragma once

#include <string>
#include <vector>

#include "kanforge/kan.hpp"
#include "kanforge/training.hpp"

namespace kf {

// Minimal standalone SVG line chart. Curves carry class="curve" so emitted
// figures can be inspected programmatically.
class SvgChart {
  public:
    SvgChart(int width, int height, std::string title);

    void add_curve(const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::string& label = "");
    void set_log_y(bool enabled) { log_y_ = enabled; }

    std::string render() const;
    void write(const std::string& path) const;

  private:
    struct Curve {
        std::vector<double> xs, ys;
        std::string label;
    };
    int width_, height_;
    std::string title_;
    std::vector<Curve> curves_;
    bool log_y_ = false;
};

// one chart per layer: every edge activation sampled over the spline domain
std::string plot_layer_activations(const KanModel& model, int layer, int samples = 200);

// the raw basis functions B_i(x) of a grid (basis_count curves)
std::string plot_basis_functions(const SplineGrid& grid, int samples = 200);

// loss and gradient-norm traces over iterations
std::string plot_trace(const TrainTrace& trace, const std::string& title);

}  // namespace kf
