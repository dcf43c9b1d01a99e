#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kanforge/dataset.hpp"

namespace kf {

// One cell of the model-comparison table.
struct EvalRow {
    std::string model;   // KAN | RandomForest | MLP
    std::string target;  // pressure | flow_rate
    double test_mse = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::vector<std::pair<std::string, std::string>> metadata;  // seeds, paths, timestamp

    std::string to_json() const;
    // plain-text table with a static reference column for context
    std::string to_table() const;
};

// Static reference MSEs shown alongside measured results; never asserted.
double reference_mse(const std::string& model, Target target);

}  // namespace kf
