#include "ferns/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "ferns/error.hpp"

namespace ferns {

std::size_t Table::n_objects() const {
  if (columns.empty()) return 0;
  return std::visit([](const auto& col) { return col.size(); }, columns[0]);
}

const ContinuousColumn& Table::continuous(std::size_t attribute) const {
  return std::get<ContinuousColumn>(columns[attribute]);
}

const CategoricalColumn& Table::categorical(std::size_t attribute) const {
  return std::get<CategoricalColumn>(columns[attribute]);
}

namespace {

// Strict full-string parse of a finite real number; ASCII whitespace at the
// ends is tolerated, anything else is not a number.
std::optional<double> parse_number(std::string_view cell) {
  std::size_t lo = 0, hi = cell.size();
  while (lo < hi && (cell[lo] == ' ' || cell[lo] == '\t')) ++lo;
  while (hi > lo && (cell[hi - 1] == ' ' || cell[hi - 1] == '\t')) --hi;
  if (lo == hi) return std::nullopt;
  double value = 0.0;
  const char* first = cell.data() + lo;
  const char* last = cell.data() + hi;
  auto [end, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || end != last || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

struct CsvContent {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180-style reader: comma-separated, LF or CRLF records, double-quoted
// fields may contain commas, newlines and "" escapes.
CsvContent parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path + ": cannot open file");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  CsvContent out;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  std::size_t line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    if (out.header.empty()) {
      out.header = std::move(record);
    } else {
      if (record.size() != out.header.size()) {
        throw Error(path + ": row " + std::to_string(out.rows.size() + 2) +
                    " has " + std::to_string(record.size()) +
                    " fields, expected " + std::to_string(out.header.size()));
      }
      out.rows.push_back(std::move(record));
    }
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw Error(path + ": line " + std::to_string(line) +
                      ": stray quote inside unquoted field");
        }
        quoted = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;  // CRLF
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(c);
    }
  }
  if (quoted) throw Error(path + ": unterminated quoted field");
  // final record without trailing newline
  if (!field.empty() || field_was_quoted || !record.empty()) end_record();

  if (out.header.empty()) throw Error(path + ": empty file, header row required");
  return out;
}

void shortest_double(std::string& out, double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  out.append(buf, end);
}

void write_csv_cell(std::string& out, std::string_view cell) {
  if (cell.find_first_of(",\"\n\r") == std::string_view::npos) {
    out.append(cell);
    return;
  }
  out.push_back('"');
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

Table load_table(const std::string& path, const LoadOptions& options) {
  CsvContent csv = parse_csv(path);
  const std::size_t n_cols = csv.header.size();
  const std::size_t n_rows = csv.rows.size();
  if (n_rows == 0) throw Error(path + ": no data rows");

  for (const auto& [name, kind] : options.type_hints) {
    (void)kind;
    if (std::find(csv.header.begin(), csv.header.end(), name) ==
        csv.header.end()) {
      throw Error(path + ": type hint names unknown column '" + name + "'");
    }
  }

  Table table;
  table.schema.reserve(n_cols);
  table.columns.reserve(n_cols);

  for (std::size_t j = 0; j < n_cols; ++j) {
    const std::string& name = csv.header[j];

    // missing values are rejected, not imputed
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (csv.rows[r][j].empty()) {
        throw Error(path + ": missing value at row " + std::to_string(r + 2) +
                    ", column '" + name + "'");
      }
    }

    auto hint = options.type_hints.find(name);
    bool numeric;
    if (hint != options.type_hints.end()) {
      numeric = hint->second == AttrKind::Continuous;
    } else {
      numeric = true;
      for (std::size_t r = 0; r < n_rows && numeric; ++r) {
        numeric = parse_number(csv.rows[r][j]).has_value();
      }
    }

    AttributeSchema attr;
    attr.name = name;
    if (numeric) {
      attr.kind = AttrKind::Continuous;
      ContinuousColumn values(n_rows);
      for (std::size_t r = 0; r < n_rows; ++r) {
        auto v = parse_number(csv.rows[r][j]);
        if (!v) {
          throw Error(path + ": row " + std::to_string(r + 2) + ", column '" +
                      name + "': '" + csv.rows[r][j] +
                      "' is not a finite number");
        }
        values[r] = *v;
      }
      table.columns.emplace_back(std::move(values));
    } else {
      attr.kind = AttrKind::Categorical;
      CategoricalColumn values(n_rows);
      std::unordered_map<std::string, std::uint8_t> index;
      for (std::size_t r = 0; r < n_rows; ++r) {
        const std::string& cell = csv.rows[r][j];
        auto it = index.find(cell);
        if (it == index.end()) {
          if (attr.levels.size() >= kMaxCategoricalLevels) {
            throw Error(path + ": column '" + name + "' has more than " +
                        std::to_string(kMaxCategoricalLevels) +
                        " distinct levels (format limit)");
          }
          it = index.emplace(cell, static_cast<std::uint8_t>(attr.levels.size()))
                   .first;
          attr.levels.push_back(cell);
        }
        values[r] = it->second;
      }
      table.columns.emplace_back(std::move(values));
    }
    table.schema.push_back(std::move(attr));
  }
  return table;
}

Dataset load_csv(const std::string& path, const std::string& decision_column,
                 const LoadOptions& options) {
  // resolve the decision column before typing the rest
  CsvContent header_probe = parse_csv(path);
  const auto& header = header_probe.header;
  std::size_t decision_index = header.size();
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == decision_column) {
      decision_index = j;
      break;
    }
  }
  if (decision_index == header.size()) {
    // fall back to a 0-based column index
    std::size_t idx = 0;
    auto [end, ec] = std::from_chars(
        decision_column.data(), decision_column.data() + decision_column.size(),
        idx);
    if (ec == std::errc{} && end == decision_column.data() + decision_column.size() &&
        idx < header.size()) {
      decision_index = idx;
    } else {
      throw Error(path + ": decision column '" + decision_column +
                  "' not found");
    }
  }
  const std::string& decision_name = header[decision_index];

  if (options.type_hints.count(decision_name)) {
    throw Error(path + ": the decision column '" + decision_name +
                "' is always categorical; drop its type hint");
  }

  LoadOptions table_options = options;
  table_options.type_hints[decision_name] = AttrKind::Categorical;
  Table full = load_table(path, table_options);

  Dataset data;
  data.decision_name = decision_name;
  const CategoricalColumn& decision = full.categorical(decision_index);
  data.class_names = full.schema[decision_index].levels;
  if (data.class_names.size() < 2) {
    throw Error(path + ": decision column '" + decision_name +
                "' has fewer than 2 classes");
  }
  data.decision.assign(decision.begin(), decision.end());

  for (std::size_t j = 0; j < full.schema.size(); ++j) {
    if (j == decision_index) continue;
    data.schema.push_back(std::move(full.schema[j]));
    data.columns.push_back(std::move(full.columns[j]));
  }
  if (data.schema.empty()) {
    throw Error(path + ": no attribute columns besides the decision");
  }
  return data;
}

void save_csv(const Dataset& data, const std::string& path) {
  std::string out;
  for (const auto& attr : data.schema) {
    write_csv_cell(out, attr.name);
    out.push_back(',');
  }
  write_csv_cell(out, data.decision_name);
  out.push_back('\n');

  const std::size_t n = data.n_objects();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < data.schema.size(); ++j) {
      if (data.schema[j].kind == AttrKind::Continuous) {
        shortest_double(out, data.continuous(j)[i]);
      } else {
        write_csv_cell(out, data.schema[j].levels[data.categorical(j)[i]]);
      }
      out.push_back(',');
    }
    write_csv_cell(out, data.class_names[data.decision[i]]);
    out.push_back('\n');
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(path + ": cannot open file for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(path + ": write failed");
}

Dataset subset(const Dataset& data, std::span<const std::uint32_t> rows) {
  Dataset out;
  out.schema = data.schema;
  out.class_names = data.class_names;
  out.decision_name = data.decision_name;
  out.columns.reserve(data.columns.size());
  for (const auto& column : data.columns) {
    std::visit(
        [&](const auto& values) {
          std::decay_t<decltype(values)> picked;
          picked.reserve(rows.size());
          for (std::uint32_t r : rows) picked.push_back(values[r]);
          out.columns.emplace_back(std::move(picked));
        },
        column);
  }
  out.decision.reserve(rows.size());
  for (std::uint32_t r : rows) out.decision.push_back(data.decision[r]);
  return out;
}

std::pair<Dataset, Dataset> split_stratified(const Dataset& data,
                                             double test_fraction,
                                             RngStream& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error("test fraction must lie in (0, 1)");
  }
  const std::size_t n = data.n_objects();
  std::vector<std::vector<std::uint32_t>> by_class(data.n_classes());
  for (std::size_t i = 0; i < n; ++i) {
    by_class[data.decision[i]].push_back(static_cast<std::uint32_t>(i));
  }

  std::vector<std::uint32_t> test_rows, train_rows;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.size() < 2) {
      throw Error("class '" + data.class_names[c] +
                  "' has fewer than 2 objects; cannot split");
    }
    const auto take = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::floor(test_fraction * static_cast<double>(members.size()) +
                          0.5)));
    rng.shuffle(std::span<std::uint32_t>(members));
    test_rows.insert(test_rows.end(), members.begin(), members.begin() + take);
    train_rows.insert(train_rows.end(), members.begin() + take, members.end());
  }
  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return {subset(data, train_rows), subset(data, test_rows)};
}

}  // namespace ferns
