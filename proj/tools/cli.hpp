#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "fracedge/ordersearch.hpp"

namespace fracedge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one invocation. `args` excludes the program name. Normal output goes
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// images/NAME.{png,pgm} paired with truth/NAME.pgm, truth/NAME.K.pgm, or
/// (labels_as_gt) labels/NAME.pgm. Sorted by NAME. Throws std::invalid_argument
/// when an image has no ground truth or the directory is missing.
std::vector<DatasetItem> load_dataset(const std::filesystem::path& root, bool labels_as_gt);

/// Applies FRACEDGE_LOG (trace|debug|info|warn|error|off) to the global logger.
void configure_logging();

}  // namespace fracedge::cli
