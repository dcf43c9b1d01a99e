#include "kanforge/report.hpp"

#include <cstdio>
#include <sstream>

#include "kanforge/jsonio.hpp"

namespace kf {

double reference_mse(const std::string& model, Target target) {
    const bool p = target == Target::Pressure;
    if (model == "KAN") return p ? 12.186 : 0.012;
    if (model == "RandomForest") return p ? 1750.017 : 0.040;
    if (model == "MLP") return p ? 78.329 : 0.002;
    throw std::invalid_argument("reference_mse: unknown model " + model);
}

std::string EvalReport::to_json() const {
    std::ostringstream os;
    os << "{\n  \"rows\": [";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i) os << ",";
        os << "\n    {\"model\": " << json::str(rows[i].model)
           << ", \"target\": " << json::str(rows[i].target)
           << ", \"test_mse\": " << json::num(rows[i].test_mse)
           << ", \"reference_mse\": "
           << json::num(reference_mse(rows[i].model, parse_target(rows[i].target))) << "}";
    }
    os << "\n  ],\n  \"metadata\": {";
    for (std::size_t i = 0; i < metadata.size(); ++i) {
        if (i) os << ", ";
        os << json::str(metadata[i].first) << ": " << json::str(metadata[i].second);
    }
    os << "}\n}\n";
    return os.str();
}

std::string EvalReport::to_table() const {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-14s %-10s %14s %14s\n", "model", "target", "test_mse",
                  "reference");
    os << buf;
    os << std::string(55, '-') << "\n";
    for (const EvalRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%-14s %-10s %14.6g %14.6g\n", r.model.c_str(),
                      r.target.c_str(), r.test_mse,
                      reference_mse(r.model, parse_target(r.target)));
        os << buf;
    }
    return os.str();
}

}  // namespace kf
