// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "zst/training.hpp"

namespace zst::cli {

/// Reproducibility record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::string config_file;
  TrainingConfig config;
  std::vector<std::pair<std::string, std::string>> inputs;
  std::vector<std::pair<std::string, std::string>> outputs;
  std::string timestamp;  // UTC, ISO 8601

  std::string to_text() const;
  void write(const std::filesystem::path& out_dir) const;
};

/// Full command line entry point. Returns the process exit code:
/// 0 success, 1 contract/validation error, 2 I/O or format error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zst::cli
