#include "flexembed/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flexembed/error.hpp"

namespace flexembed::config {

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"out", "run", "output directory", true},
      {"panel", "", "panel CSV (default: <out>/data/panel.csv)", true},
      {"metadata", "", "unit metadata CSV (default: <out>/data/units.csv)", true},
      {"ground_truth", "", "optional ground-truth CSV (default: <out>/data/ground_truth.csv)", true},
      {"seed", "", "random seed (mandatory)"},
      {"synth.hours", "17520", "hours of synthetic data"},
      {"synth.units_per_archetype", "10", "synthetic units per archetype"},
      {"synth.noise", "0.04", "synthetic output noise (fraction of capacity)"},
      {"entropy_threshold", "0.3", "minimum state entropy (bits) to keep a unit"},
      {"context_hours", "24", "encoder context length"},
      {"forecast_hours", "24", "decoder forecast length"},
      {"window_stride", "48", "hours between window starts"},
      {"split.train", "0.7", "training share of windows"},
      {"split.validation", "0.2", "validation share of windows"},
      {"split.test", "0.1", "test share of windows"},
      {"hidden", "512", "GRU hidden size"},
      {"embedding", "8", "unit embedding size"},
      {"lr", "0.001", "Adam learning rate"},
      {"batch", "64", "mini-batch size"},
      {"epochs", "100", "maximum training epochs"},
      {"patience", "10", "early-stopping patience (epochs)"},
      {"identifier", "embedding", "unit identifier: embedding or one_hot"},
      {"decoder_covariates", "all", "decoder inputs: all or calendar_only"},
      {"linkage", "complete", "complete, average or single"},
      {"k", "0", "number of clusters (0 selects by silhouette)"},
      {"k_min", "2", "smallest k tried by selection"},
      {"k_max", "10", "largest k tried by selection"},
      {"low_load_quantile", "0.1", "residual-load quantile that counts as low load"},
      {"period_split", "auto", "ISO instant splitting the robustness periods (auto = midpoint)"},
      {"robustness.k", "4", "fixed k for robustness comparisons"},
      {"robustness.periods", "true", "retrain on the two periods during robustness"},
      {"baselines", "true", "run the raw-series baselines during robustness"},
      {"baseline.block_hours", "24", "averaging block for baseline series"},
      {"baseline.fourier_coeffs", "64", "Fourier coefficients for the baseline"},
      {"baseline.fourier_sweep", "8,16,32,64", "coefficient counts for the Fourier sweep"},
  };
  return keys;
}

namespace {

const KeySpec* find_spec(const std::string& key) {
  for (const auto& s : schema()) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

bool is_bool(const std::string& s) {
  return s == "true" || s == "false" || s == "1" || s == "0" || s == "yes" || s == "no" ||
         s == "on" || s == "off";
}

// Keys with a numeric or boolean default only accept values of the same kind;
// list and free-text keys are checked where they are used.
void check_kind(const KeySpec& spec, const std::string& value) {
  const auto& d = spec.default_value;
  if ((d == "true" || d == "false") && !is_bool(value)) {
    throw ConfigError("config key '" + spec.key + "' expects true or false, got '" + value + "'");
  }
  if (is_number(d) && !is_number(value)) {
    throw ConfigError("config key '" + spec.key + "' expects a number, got '" + value + "'");
  }
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& s : schema()) values_[s.key] = s.default_value;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  RunConfig c;
  c.merge_file(path);
  return c;
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_spec(key);
  if (!spec) throw ConfigError("unknown config key '" + key + "'");
  check_kind(*spec, value);
  values_[key] = value;
  assigned_[key] = true;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

bool RunConfig::is_set(const std::string& key) const { return assigned_.count(key) > 0; }

const std::string& RunConfig::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::num(const std::string& key) const {
  const auto& s = str(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + s + "'");
  }
  return v;
}

long RunConfig::integer(const std::string& key) const {
  const auto& s = str(key);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t RunConfig::u64(const std::string& key) const {
  const auto& s = str(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool RunConfig::flag(const std::string& key) const {
  const auto& s = str(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + s + "'");
}

std::vector<long> RunConfig::int_list(const std::string& key) const {
  std::vector<long> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError("config key '" + key + "' expects a comma-separated integer list");
    }
    out.push_back(v);
  }
  return out;
}

std::uint64_t RunConfig::seed() const {
  if (!is_set("seed")) throw ConfigError("a seed is required (set `seed` in the config or pass --seed)");
  return u64("seed");
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [key, value] : values_) {
    if (find_spec(key)->path) continue;
    for (char c : key + "=" + value + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

}  // namespace flexembed::config
