#pragma once

#include <cstdint>
#include <vector>

#include "flexembed/dataset.hpp"
#include "flexembed/rng.hpp"

namespace testsupport {

// Random in-memory dataset: `units` state series of `hours` hours with
// random covariates and windows of `context` + `forecast` hours.
inline flexembed::dataset::SequenceDataset random_dataset(std::size_t units, std::size_t hours,
                                                          std::size_t context, std::size_t forecast,
                                                          std::uint64_t seed) {
  using namespace flexembed;
  Rng rng(seed);
  dataset::SequenceDataset d;
  d.window = {context, forecast, context + forecast};
  d.features.covariates = Matrix(hours, dataset::kModelCovariates.size());
  for (auto& v : d.features.covariates.values()) v = rng.uniform();
  for (std::size_t t = 0; t < hours; ++t) {
    d.features.hour.push_back(static_cast<std::uint8_t>(t % 24));
    d.features.weekday.push_back(static_cast<std::uint8_t>((t / 24) % 7));
    d.features.valid.push_back(true);
  }
  for (std::size_t u = 0; u < units; ++u) {
    dataset::StateSeries s{"u" + std::to_string(u), {}};
    for (std::size_t t = 0; t < hours; ++t) s.states.push_back(static_cast<std::int8_t>(rng.below(3)));
    d.states.push_back(s);
    d.unit_ids.push_back(s.unit_id);
    for (std::size_t start = 0; start + context + forecast <= hours; start += context + forecast) {
      d.windows.push_back({u, start});
    }
  }
  return d;
}

}  // namespace testsupport
