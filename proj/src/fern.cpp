#include "ferns/fern.hpp"

#include <cmath>
#include <numeric>

#include "ferns/error.hpp"

namespace ferns {

namespace {

// A split can be generated for any continuous attribute, and for a
// categorical attribute only if it has a proper non-empty level subset.
bool splittable(const AttributeSchema& attr) {
  return attr.kind == AttrKind::Continuous || attr.levels.size() >= 2;
}

bool split_test(const Split& split, const Table& data, std::size_t row) {
  if (const auto* t = std::get_if<ThresholdSplit>(&split.payload)) {
    return data.continuous(split.attribute)[row] < t->threshold;
  }
  const auto& m = std::get<LevelMaskSplit>(split.payload);
  return (m.mask >> data.categorical(split.attribute)[row]) & 1u;
}

}  // namespace

std::vector<Split> generate_splits(const Table& data, int depth,
                                   RngStream& rng) {
  if (depth < 1 || depth > kMaxDepth) {
    throw Error("depth must lie in [1, " + std::to_string(kMaxDepth) + "]");
  }
  const std::size_t n_attrs = data.n_attributes();
  const std::size_t n = data.n_objects();
  if (n_attrs == 0 || n == 0) throw Error("cannot split an empty table");

  bool any_splittable = false;
  for (const auto& attr : data.schema) any_splittable |= splittable(attr);
  if (!any_splittable) {
    throw Error("no splittable attributes (all are 1-level categoricals)");
  }

  std::vector<Split> splits;
  splits.reserve(static_cast<std::size_t>(depth));
  for (int d = 0; d < depth; ++d) {
    std::uint32_t j;
    do {
      j = static_cast<std::uint32_t>(rng.below(n_attrs));
    } while (!splittable(data.schema[j]));

    Split split;
    split.attribute = j;
    if (data.schema[j].kind == AttrKind::Continuous) {
      const auto& values = data.continuous(j);
      const double a = values[rng.below(n)];
      const double b = values[rng.below(n)];
      split.payload = ThresholdSplit{(a + b) / 2.0};
    } else {
      const auto n_levels = data.schema[j].levels.size();
      // uniform over the 2^L - 2 proper non-empty subsets
      const std::uint32_t mask = static_cast<std::uint32_t>(
          rng.below((std::uint64_t(1) << n_levels) - 2) + 1);
      split.payload = LevelMaskSplit{mask};
    }
    splits.push_back(split);
  }
  return splits;
}

std::uint32_t leaf_index(std::span<const Split> splits, const Table& data,
                         std::size_t row) {
  std::uint32_t index = 0;
  for (std::size_t d = 0; d < splits.size(); ++d) {
    if (split_test(splits[d], data, row)) index |= 1u << d;
  }
  return index;
}

std::vector<std::uint16_t> leaf_indices(std::span<const Split> splits,
                                        const Table& data) {
  const std::size_t n = data.n_objects();
  std::vector<std::uint16_t> leaf(n, 0);
  for (std::size_t d = 0; d < splits.size(); ++d) {
    const auto bit = static_cast<std::uint16_t>(1u << d);
    const Split& split = splits[d];
    if (const auto* t = std::get_if<ThresholdSplit>(&split.payload)) {
      const auto& col = data.continuous(split.attribute);
      for (std::size_t i = 0; i < n; ++i) {
        if (col[i] < t->threshold) leaf[i] |= bit;
      }
    } else {
      const auto mask = std::get<LevelMaskSplit>(split.payload).mask;
      const auto& col = data.categorical(split.attribute);
      for (std::size_t i = 0; i < n; ++i) {
        if ((mask >> col[i]) & 1u) leaf[i] |= bit;
      }
    }
  }
  return leaf;
}

std::vector<double> fit_scores(std::span<const std::uint16_t> leaf_of,
                               std::span<const std::uint32_t> class_of,
                               std::span<const std::uint32_t> bag_class_counts,
                               int depth, std::size_t n_classes,
                               bool balanced) {
  if (depth < 1 || depth > kMaxDepth) {
    throw Error("depth must lie in [1, " + std::to_string(kMaxDepth) + "]");
  }
  if (leaf_of.size() != class_of.size()) {
    throw Error("leaf and class arrays differ in length");
  }
  const std::size_t n_leaves = std::size_t(1) << depth;
  const std::size_t n_bag = leaf_of.size();
  if (bag_class_counts.size() != n_classes) {
    throw Error("bag class counts must have one entry per class");
  }
  const std::uint64_t counted = std::accumulate(
      bag_class_counts.begin(), bag_class_counts.end(), std::uint64_t(0));
  if (counted != n_bag || n_bag == 0) {
    throw Error("bag class counts do not sum to the bag size");
  }

  // per-object weight: 1 unbalanced, or n_bag / (C * n_bag_y) so that every
  // class carries equal total weight within the bag; classes absent from the
  // bag get zero weight
  std::vector<double> class_weight(n_classes, 1.0);
  if (balanced) {
    for (std::size_t y = 0; y < n_classes; ++y) {
      class_weight[y] = bag_class_counts[y] == 0
                            ? 0.0
                            : static_cast<double>(n_bag) /
                                  (static_cast<double>(n_classes) *
                                   static_cast<double>(bag_class_counts[y]));
    }
  }

  std::vector<double> weighted(n_leaves * n_classes, 0.0);
  std::vector<std::uint32_t> occupancy(n_leaves, 0);
  for (std::size_t i = 0; i < n_bag; ++i) {
    if (leaf_of[i] >= n_leaves) throw Error("leaf index out of range");
    if (class_of[i] >= n_classes) throw Error("class index out of range");
    weighted[std::size_t(leaf_of[i]) * n_classes + class_of[i]] +=
        class_weight[class_of[i]];
    ++occupancy[leaf_of[i]];
  }

  const double log_c = std::log(static_cast<double>(n_classes));
  std::vector<double> scores(n_leaves * n_classes, 0.0);
  for (std::size_t leaf = 0; leaf < n_leaves; ++leaf) {
    if (occupancy[leaf] == 0) continue;  // empty leaves stay exactly zero
    const double* w = &weighted[leaf * n_classes];
    double total = 0.0;
    for (std::size_t y = 0; y < n_classes; ++y) total += w[y];
    double* s = &scores[leaf * n_classes];
    for (std::size_t y = 0; y < n_classes; ++y) {
      // Dirichlet-smoothed weighted frequency, then the additive transform
      s[y] = std::log((1.0 + w[y]) /
                      (total + static_cast<double>(n_classes))) +
             log_c;
    }
  }
  return scores;
}

}  // namespace ferns
