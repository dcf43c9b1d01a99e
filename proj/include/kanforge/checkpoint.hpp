#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kanforge/baselines.hpp"
#include "kanforge/kan.hpp"

namespace kf {

inline constexpr int kSchemaVersion = 1;

// ordered key/value pairs stored under "metadata"; the "timestamp" key is the
// only field allowed to differ between otherwise identical runs
using Metadata = std::vector<std::pair<std::string, std::string>>;

void save_kan(const KanModel& model, const std::string& path, const Metadata& meta = {});
KanModel load_kan(const std::string& path);

void save_mlp(const MlpModel& model, std::uint64_t seed, const std::string& path,
              const Metadata& meta = {});
MlpModel load_mlp(const std::string& path);

void save_forest(const ForestModel& model, const std::string& path, const Metadata& meta = {});
ForestModel load_forest(const std::string& path);

// "kan", "mlp" or "forest"; throws on schema mismatch
std::string checkpoint_kind(const std::string& path);

}  // namespace kf
