#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ferns/ensemble.hpp"

namespace ferns {

inline constexpr int kModelFormatVersion = 1;

struct OobSummary {
  std::optional<double> error_rate;
  std::uint32_t covered_objects = 0;
};

/// Saves a model as versioned, human-inspectable JSON. Categorical split
/// payloads are written as explicit level-label lists (not raw masks) and
/// scores as shortest round-trip decimals, so save -> load -> save is
/// byte-identical.
void save_model(const Model& model, const std::string& path,
                const std::optional<OobSummary>& oob_summary = {});

struct LoadedModel {
  Model model;
  std::optional<OobSummary> oob_summary;
};

/// Loads and validates a model file; a format version mismatch is an
/// explicit error. Loaded models carry no OOB accumulators.
LoadedModel load_model(const std::string& path);

}  // namespace ferns
