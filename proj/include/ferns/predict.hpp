#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ferns/dataset.hpp"
#include "ferns/ensemble.hpp"

namespace ferns {

/// Per-class additive score sums for one object.
using ScoreVector = std::vector<double>;

/// A strictly positive class distribution summing to 1.
class Prior {
 public:
  explicit Prior(std::vector<double> probabilities);

  std::size_t size() const { return probabilities_.size(); }
  std::span<const double> probabilities() const { return probabilities_; }
  std::span<const double> log_probabilities() const { return logs_; }

 private:
  std::vector<double> probabilities_;
  std::vector<double> logs_;
};

/// Score correction for a known test-time class distribution:
/// out[y] = s[y] + log p[y].
ScoreVector apply_prior(const ScoreVector& scores, const Prior& prior);

/// Argmax with ties broken by lowest class index.
std::uint32_t argmax_class(const ScoreVector& scores);

/// Binds a model to a table for prediction: attributes are resolved by
/// name, kinds must match, and categorical values are re-encoded into the
/// model's level encoding. An object holding a level unknown to the model
/// is an error when scored.
class Scorer {
 public:
  Scorer(const Model& model, const Table& data);

  /// values[y] = sum over ferns of the score row of the object's leaf.
  ScoreVector score(std::size_t row) const;

  /// MAP rule over the (optionally prior-corrected) score vector.
  std::uint32_t classify(std::size_t row, const Prior* prior = nullptr) const;

 private:
  const Model* model_;
  const Table* data_;
  std::vector<std::uint32_t> column_of_;            // model attribute -> table column
  std::vector<std::vector<std::int32_t>> level_map_;  // table level -> model level, -1 unknown
};

/// One-shot helpers over a temporary Scorer.
ScoreVector score(const Model& model, const Table& data, std::size_t row);
std::uint32_t classify(const Model& model, const Table& data, std::size_t row,
                       const Prior* prior = nullptr);

}  // namespace ferns
