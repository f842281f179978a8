#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flexembed/config.hpp"
#include "flexembed/error.hpp"
#include "flexembed/pipeline.hpp"

namespace {

std::string schema_text() {
  std::string out = "Config keys (key = default: description):\n";
  for (const auto& k : flexembed::config::schema()) {
    out += "  " + k.key + " = " + (k.default_value.empty() ? "<unset>" : k.default_value) + ": " + k.description + "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn unit embeddings from hourly dispatch, cluster them and characterize the clusters."};
  app.require_subcommand(1, 1);
  app.footer(schema_text());

  std::string config_file;
  std::optional<std::string> seed, out, linkage, k, period_split, identifier, decoder_covariates;
  std::vector<std::string> overrides;
  app.add_option("--config", config_file, "flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "random seed (mandatory unless set in the config)");
  app.add_option("--out", out, "output directory");
  app.add_option("--linkage", linkage, "complete, average or single");
  app.add_option("--k", k, "number of clusters (0 = select by silhouette)");
  app.add_option("--period-split", period_split, "ISO 8601 instant splitting the robustness periods, or auto");
  app.add_option("--identifier", identifier, "unit identifier mode")->check(CLI::IsMember({"embedding", "one_hot"}));
  app.add_option("--decoder-covariates", decoder_covariates, "decoder covariates mode")
      ->check(CLI::IsMember({"calendar_only", "all"}));
  app.add_option("--set", overrides, "override any config key: --set key=value");

  std::string command;
  for (const auto& name : flexembed::pipeline::commands()) {
    app.add_subcommand(name, "run the " + name + " step")->fallthrough()->callback([&command, name] { command = name; });
  }
  app.add_subcommand("all", "run every step in order")->fallthrough()->callback([&command] { command = "all"; });

  CLI11_PARSE(app, argc, argv);

  try {
    flexembed::config::RunConfig cfg;
    if (!config_file.empty()) cfg.merge_file(config_file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw flexembed::ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    const std::pair<const char*, const std::optional<std::string>*> flags[] = {
        {"seed", &seed},
        {"out", &out},
        {"linkage", &linkage},
        {"k", &k},
        {"period_split", &period_split},
        {"identifier", &identifier},
        {"decoder_covariates", &decoder_covariates}};
    for (const auto& [key, value] : flags) {
      if (*value) cfg.set(key, **value);
    }
    if (command == "all") {
      flexembed::pipeline::run_all(cfg, std::cerr);
    } else {
      flexembed::pipeline::run(command, cfg, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
