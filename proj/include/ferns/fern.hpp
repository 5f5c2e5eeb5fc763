#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "ferns/dataset.hpp"
#include "ferns/rng.hpp"

namespace ferns {

inline constexpr int kMaxDepth = 16;  // keeps the 2^D score rows bounded

/// Binary test (value < threshold) on a continuous attribute.
struct ThresholdSplit {
  double threshold;

  bool operator==(const ThresholdSplit&) const = default;
};

/// Binary test (level in subset) on a categorical attribute; bit i of the
/// mask is set iff level i belongs to the subset. The mask is never empty
/// and never the full level set.
struct LevelMaskSplit {
  std::uint32_t mask;

  bool operator==(const LevelMaskSplit&) const = default;
};

struct Split {
  std::uint32_t attribute;
  std::variant<ThresholdSplit, LevelMaskSplit> payload;
};

/// One base classifier: D binary splits plus a 2^D x C score table.
/// Fitted leaf rows encode a normalized probability vector via
/// S(y) = log P(y) + log C; leaves that received no bag objects are
/// exactly zero.
struct Fern {
  std::vector<Split> splits;
  std::vector<double> scores;  // (1 << depth) * C, row-major [leaf][class]

  int depth() const { return static_cast<int>(splits.size()); }
};

/// Draws D splits. Each split's attribute is drawn uniformly with
/// replacement from all attributes (1-level categoricals are resampled);
/// a continuous threshold is the mean of the attribute values of two
/// objects drawn uniformly with replacement, and a categorical subset is
/// drawn uniformly from the 2^L - 2 proper non-empty subsets.
std::vector<Split> generate_splits(const Table& data, int depth,
                                   RngStream& rng);

/// Leaf index of one object: bit d is set iff split d's test holds.
std::uint32_t leaf_index(std::span<const Split> splits, const Table& data,
                         std::size_t row);

/// Leaf indices of all objects (column-wise pass over the split attributes).
std::vector<std::uint16_t> leaf_indices(std::span<const Split> splits,
                                        const Table& data);

/// Fits the 2^D x C score table from the bag objects' leaf and class
/// indices.
///
/// Unbalanced: P(y) = (1 + n_leaf_y) / (n_leaf + C), S(y) = log P(y) + log C.
/// Balanced: raw counts are replaced by weighted counts
/// w = n_leaf_y * n_bag / (C * n_bag_y), so each class carries equal total
/// weight in the bag; classes absent from the bag contribute zero weight.
/// Empty leaves get an all-zero row.
std::vector<double> fit_scores(std::span<const std::uint16_t> leaf_of,
                               std::span<const std::uint32_t> class_of,
                               std::span<const std::uint32_t> bag_class_counts,
                               int depth, std::size_t n_classes, bool balanced);

}  // namespace ferns
