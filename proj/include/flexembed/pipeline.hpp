#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "flexembed/config.hpp"

namespace flexembed::pipeline {

/// Fixed output layout under the configured `out` directory.
struct Layout {
  std::filesystem::path root;

  std::filesystem::path data() const { return root / "data"; }
  std::filesystem::path embeddings() const { return root / "embeddings"; }
  std::filesystem::path clusters() const { return root / "clusters"; }
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path checkpoints() const { return root / "checkpoints"; }
  std::filesystem::path logs() const { return root / "logs"; }
};

Layout layout(const config::RunConfig& cfg);

/// synth, prepare, train, embed, cluster, analyze, robustness, report.
const std::vector<std::string>& commands();

/// Runs one command. On failure a `logs/<command>.failed` marker records the
/// error and the exception propagates; success removes a stale marker.
void run(const std::string& command, const config::RunConfig& cfg, std::ostream& log);

/// Every command in order; `synth` is skipped when a panel path is configured.
void run_all(const config::RunConfig& cfg, std::ostream& log);

}  // namespace flexembed::pipeline
