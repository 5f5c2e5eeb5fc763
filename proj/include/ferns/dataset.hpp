#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ferns/rng.hpp"

namespace ferns {

enum class AttrKind { Continuous, Categorical };

/// Level subsets are encoded in a 32-bit mask with the sign bit unused.
inline constexpr int kMaxCategoricalLevels = 31;

struct AttributeSchema {
  std::string name;
  AttrKind kind = AttrKind::Continuous;
  std::vector<std::string> levels;  // categorical only; index is the encoding

  bool operator==(const AttributeSchema&) const = default;
};

using ContinuousColumn = std::vector<double>;
using CategoricalColumn = std::vector<std::uint8_t>;  // level indices
using Column = std::variant<ContinuousColumn, CategoricalColumn>;

/// A columnar table of typed attribute values. Immutable after construction;
/// safe to share across concurrent workers.
struct Table {
  std::vector<AttributeSchema> schema;
  std::vector<Column> columns;

  std::size_t n_attributes() const { return schema.size(); }
  std::size_t n_objects() const;
  const ContinuousColumn& continuous(std::size_t attribute) const;
  const CategoricalColumn& categorical(std::size_t attribute) const;
};

/// A table plus its categorical decision vector.
struct Dataset : Table {
  std::vector<std::uint32_t> decision;      // class index per object
  std::vector<std::string> class_names;     // first-appearance order
  std::string decision_name = "class";

  std::size_t n_classes() const { return class_names.size(); }
};

struct LoadOptions {
  /// Per-column kind overrides; inference is used for unlisted columns.
  std::map<std::string, AttrKind> type_hints;
};

/// Loads an RFC-4180-style CSV with a mandatory header row.
///
/// A column is inferred Continuous iff every cell parses as a finite real
/// number, otherwise Categorical with levels in first-appearance order.
/// The decision column (by name, or 0-based index if no column has that
/// name) is always categorical and is removed from the attribute list.
/// Empty cells, ragged rows, >31 categorical levels and fewer than two
/// classes are errors.
Dataset load_csv(const std::string& path, const std::string& decision_column,
                 const LoadOptions& options = {});

/// Loads a CSV without a decision column (prediction input).
Table load_table(const std::string& path, const LoadOptions& options = {});

/// Writes a dataset back to CSV, attributes in schema order and the decision
/// column last. Continuous values use shortest round-trip formatting.
void save_csv(const Dataset& data, const std::string& path);

/// Copies the selected rows into a new dataset (schema and class names are
/// shared verbatim, so encodings are preserved).
Dataset subset(const Dataset& data, std::span<const std::uint32_t> rows);

/// Random per-class partition: the test part holds round-half-up
/// testFraction of each class, at least one object per class. Requires at
/// least two objects of every class.
std::pair<Dataset, Dataset> split_stratified(const Dataset& data,
                                             double test_fraction,
                                             RngStream& rng);

}  // namespace ferns
