#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ferns/dataset.hpp"
#include "ferns/fern.hpp"
#include "ferns/rng.hpp"

namespace ferns {

/// Objects sampled with replacement for one fern, plus the objects left out.
struct Bag {
  std::vector<std::uint32_t> indices;  // N draws, in draw order
  std::vector<std::uint32_t> oob;      // sorted; disjoint from indices
};

/// Draws a bag of size N from N objects.
Bag draw_bag(std::uint32_t n_objects, RngStream& rng);

struct AttributeImportance {
  std::optional<double> importance;  // empty when no fern contributed
  std::uint32_t ferns_used = 0;      // ferns whose split list references it
};

struct ImportanceReport {
  std::vector<AttributeImportance> per_attribute;
};

/// A trained ensemble. Prediction needs only schema, class names and ferns;
/// the OOB accumulators are tied to the training set and are not persisted
/// by the model file format.
struct Model {
  std::vector<AttributeSchema> schema;
  std::vector<std::string> class_names;
  std::uint32_t fern_count = 0;
  int depth = 0;
  bool balanced = true;
  std::uint64_t master_seed = 0;
  std::vector<Fern> ferns;                  // empty when trained without retention
  std::vector<double> oob_scores;           // N x C; row i sums the score rows
                                            // of ferns holding object i OOB
  std::vector<std::uint32_t> oob_votes;     // per-object count of such ferns
  std::optional<ImportanceReport> importance;

  std::size_t n_classes() const { return class_names.size(); }
};

struct TrainOptions {
  std::uint32_t fern_count = 1000;
  int depth = 5;
  bool balanced = true;
  bool compute_importance = false;
  std::uint64_t seed = 0;
  unsigned workers = 0;      // 0 = hardware concurrency
  bool retain_ferns = true;  // depth sweeps drop fitted ferns to bound memory
};

/// Trains fern k from RngStream(seed, k): bag, splits, score table, OOB
/// accumulation and (optionally) the importance pass. Ferns are independent
/// tasks; per-fern contributions are merged in fern-index order, so the
/// result is bit-identical for any worker count.
Model train(const Dataset& data, const TrainOptions& options);

}  // namespace ferns
