#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ferns/dataset.hpp"
#include "ferns/ensemble.hpp"
#include "ferns/fern.hpp"
#include "ferns/rng.hpp"

namespace ferns {

struct OobReport {
  std::optional<double> error_rate;        // empty when no object is covered
  std::uint32_t covered_objects = 0;       // objects with at least one OOB vote
  std::vector<std::int32_t> predictions;   // per object; -1 = undefined
  std::vector<std::uint64_t> confusion;    // C x C row-major, true x predicted
};

/// OOB error estimate of a model over its training set: each covered object
/// is classified by the argmax of its accumulated OOB score row.
OobReport oob_report(const Model& model, const Dataset& data);

/// The importance report captured during training; error if the model was
/// trained without it (post-hoc importance is unsupported, bags are not
/// persisted).
const ImportanceReport& importance(const Model& model);

/// Stream id of the permutation drawn for (fern, attribute).
inline std::uint64_t importance_stream_id(std::uint32_t fern_index,
                                          std::uint32_t attribute) {
  return mix64(mix64(0x70657268757465ULL ^ fern_index) ^ attribute);
}

/// Mean OOB score drop of the true class for one fern and one attribute
/// under an explicit permutation of the attribute's values among the OOB
/// objects. Building block of the per-fern importance pass.
double importance_delta(const Fern& fern, const Dataset& data,
                        std::span<const std::uint32_t> oob,
                        std::uint32_t attribute,
                        std::span<const std::uint32_t> permutation);

/// Runs the importance pass for one fern: every distinct attribute in the
/// fern's split list gets one fresh permutation of its values among the
/// fern's OOB objects, drawn from RngStream(seed, importance_stream_id).
/// Returns (attribute, mean score drop) pairs, attributes ascending.
std::vector<std::pair<std::uint32_t, double>> fern_importance_pass(
    const Fern& fern, const Dataset& data, std::span<const std::uint32_t> oob,
    std::uint64_t master_seed, std::uint32_t fern_index);

struct CrossvalOptions {
  std::uint32_t fern_count = 1000;
  int depth = 5;
  bool balanced = true;
  std::uint32_t folds = 10;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

struct CrossvalResult {
  std::vector<double> errors;  // per-iteration test error
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single fold
};

/// Stochastic cross-validation: `folds` independent stratified splits, one
/// model per split, test error on the held-out part.
CrossvalResult crossval(const Dataset& data, const CrossvalOptions& options);

struct SweepOptions {
  std::uint32_t fern_count = 1000;
  bool balanced = true;
  std::vector<int> depths;
  std::uint32_t repetitions = 10;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

struct DepthSweepRow {
  int depth = 0;
  double mean_oob_error = 0.0;
  double stddev = 0.0;
};

struct DepthSweepResult {
  std::vector<DepthSweepRow> rows;
  int best_depth = 0;  // minimal mean OOB error, ties to the smallest depth
};

/// Trains `repetitions` models per depth and reports mean OOB error per
/// depth plus the best depth.
DepthSweepResult depth_sweep(const Dataset& data, const SweepOptions& options);

}  // namespace ferns
