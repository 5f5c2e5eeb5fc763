#include "ferns/model_io.hpp"

#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "ferns/error.hpp"

namespace ferns {

namespace {

using nlohmann::json;

json schema_to_json(const std::vector<AttributeSchema>& schema) {
  json out = json::array();
  for (const AttributeSchema& attr : schema) {
    json entry;
    entry["name"] = attr.name;
    if (attr.kind == AttrKind::Continuous) {
      entry["kind"] = "continuous";
    } else {
      entry["kind"] = "categorical";
      entry["levels"] = attr.levels;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

json split_to_json(const Split& split,
                   const std::vector<AttributeSchema>& schema) {
  json out;
  out["attribute"] = split.attribute;
  if (const auto* t = std::get_if<ThresholdSplit>(&split.payload)) {
    out["threshold"] = t->threshold;
  } else {
    // level subsets travel as label lists so files survive re-encoding
    const auto mask = std::get<LevelMaskSplit>(split.payload).mask;
    json labels = json::array();
    const auto& levels = schema[split.attribute].levels;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      if ((mask >> l) & 1u) labels.push_back(levels[l]);
    }
    out["levels"] = std::move(labels);
  }
  return out;
}

template <class T>
T field(const json& node, const char* key) {
  auto it = node.find(key);
  if (it == node.end()) {
    throw Error(std::string("model file: missing field '") + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("model file: field '") + key +
                "' has the wrong type");
  }
}

std::vector<AttributeSchema> schema_from_json(const json& node) {
  std::vector<AttributeSchema> schema;
  schema.reserve(node.size());
  for (const json& entry : node) {
    AttributeSchema attr;
    attr.name = field<std::string>(entry, "name");
    const auto kind = field<std::string>(entry, "kind");
    if (kind == "continuous") {
      attr.kind = AttrKind::Continuous;
    } else if (kind == "categorical") {
      attr.kind = AttrKind::Categorical;
      attr.levels = field<std::vector<std::string>>(entry, "levels");
      if (attr.levels.empty() ||
          attr.levels.size() > kMaxCategoricalLevels) {
        throw Error("model file: attribute '" + attr.name +
                    "' has an invalid level list");
      }
    } else {
      throw Error("model file: unknown attribute kind '" + kind + "'");
    }
    schema.push_back(std::move(attr));
  }
  return schema;
}

Split split_from_json(const json& node,
                      const std::vector<AttributeSchema>& schema) {
  Split split;
  split.attribute = field<std::uint32_t>(node, "attribute");
  if (split.attribute >= schema.size()) {
    throw Error("model file: split references attribute " +
                std::to_string(split.attribute) + " beyond the schema");
  }
  const AttributeSchema& attr = schema[split.attribute];
  if (node.contains("threshold")) {
    if (attr.kind != AttrKind::Continuous) {
      throw Error("model file: threshold split on categorical attribute '" +
                  attr.name + "'");
    }
    split.payload = ThresholdSplit{field<double>(node, "threshold")};
  } else if (node.contains("levels")) {
    if (attr.kind != AttrKind::Categorical) {
      throw Error("model file: level split on continuous attribute '" +
                  attr.name + "'");
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t l = 0; l < attr.levels.size(); ++l) {
      index.emplace(attr.levels[l], l);
    }
    std::uint32_t mask = 0;
    for (const auto& label : field<std::vector<std::string>>(node, "levels")) {
      auto it = index.find(label);
      if (it == index.end()) {
        throw Error("model file: level '" + label +
                    "' is not in the schema of attribute '" + attr.name + "'");
      }
      mask |= 1u << it->second;
    }
    const std::uint32_t full = (1u << attr.levels.size()) - 1u;
    if (mask == 0 || mask == full) {
      throw Error("model file: level subset of attribute '" + attr.name +
                  "' must be proper and non-empty");
    }
    split.payload = LevelMaskSplit{mask};
  } else {
    throw Error("model file: split carries neither threshold nor levels");
  }
  return split;
}

}  // namespace

void save_model(const Model& model, const std::string& path,
                const std::optional<OobSummary>& oob_summary) {
  if (model.ferns.size() != model.fern_count) {
    throw Error("model does not carry its ferns; nothing to save");
  }
  json root;
  root["format_version"] = kModelFormatVersion;
  root["schema"] = schema_to_json(model.schema);
  root["class_names"] = model.class_names;
  root["fern_count"] = model.fern_count;
  root["depth"] = model.depth;
  root["balanced"] = model.balanced;
  root["master_seed"] = model.master_seed;

  json ferns = json::array();
  for (const Fern& fern : model.ferns) {
    json entry;
    json splits = json::array();
    for (const Split& split : fern.splits) {
      splits.push_back(split_to_json(split, model.schema));
    }
    entry["splits"] = std::move(splits);
    entry["scores"] = fern.scores;
    ferns.push_back(std::move(entry));
  }
  root["ferns"] = std::move(ferns);

  if (oob_summary) {
    json summary;
    if (oob_summary->error_rate) {
      summary["error_rate"] = *oob_summary->error_rate;
    } else {
      summary["error_rate"] = nullptr;
    }
    summary["covered_objects"] = oob_summary->covered_objects;
    root["oob_summary"] = std::move(summary);
  }
  if (model.importance) {
    json rows = json::array();
    for (const AttributeImportance& entry : model.importance->per_attribute) {
      json row;
      if (entry.importance) {
        row["importance"] = *entry.importance;
      } else {
        row["importance"] = nullptr;
      }
      row["ferns_used"] = entry.ferns_used;
      rows.push_back(std::move(row));
    }
    root["importance"] = std::move(rows);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open file for writing");
  out << root.dump(1, '\t') << '\n';
  if (!out) throw Error(path + ": write failed");
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path + ": cannot open file");
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw Error(path + ": not a valid model file (" + e.what() + ")");
  }

  const int version = field<int>(root, "format_version");
  if (version != kModelFormatVersion) {
    throw Error(path + ": model format version " + std::to_string(version) +
                " is not supported (expected " +
                std::to_string(kModelFormatVersion) + ")");
  }

  LoadedModel loaded;
  Model& model = loaded.model;
  model.schema = schema_from_json(field<json>(root, "schema"));
  model.class_names = field<std::vector<std::string>>(root, "class_names");
  if (model.class_names.size() < 2) {
    throw Error(path + ": model must have at least 2 classes");
  }
  model.fern_count = field<std::uint32_t>(root, "fern_count");
  model.depth = field<int>(root, "depth");
  if (model.depth < 1 || model.depth > kMaxDepth) {
    throw Error(path + ": depth out of range");
  }
  model.balanced = field<bool>(root, "balanced");
  model.master_seed = field<std::uint64_t>(root, "master_seed");

  const json& ferns = field<json>(root, "ferns");
  if (ferns.size() != model.fern_count) {
    throw Error(path + ": fern_count does not match the fern list");
  }
  const std::size_t expected_scores =
      (std::size_t(1) << model.depth) * model.class_names.size();
  model.ferns.reserve(ferns.size());
  for (const json& entry : ferns) {
    Fern fern;
    for (const json& split : field<json>(entry, "splits")) {
      fern.splits.push_back(split_from_json(split, model.schema));
    }
    if (fern.splits.size() != static_cast<std::size_t>(model.depth)) {
      throw Error(path + ": fern split list does not match the model depth");
    }
    fern.scores = field<std::vector<double>>(entry, "scores");
    if (fern.scores.size() != expected_scores) {
      throw Error(path + ": fern score table has the wrong size");
    }
    model.ferns.push_back(std::move(fern));
  }

  if (root.contains("oob_summary")) {
    const json& summary = root["oob_summary"];
    OobSummary oob;
    if (!summary["error_rate"].is_null()) {
      oob.error_rate = field<double>(summary, "error_rate");
    }
    oob.covered_objects = field<std::uint32_t>(summary, "covered_objects");
    loaded.oob_summary = oob;
  }
  if (root.contains("importance")) {
    ImportanceReport report;
    for (const json& row : root["importance"]) {
      AttributeImportance entry;
      if (!row["importance"].is_null()) {
        entry.importance = field<double>(row, "importance");
      }
      entry.ferns_used = field<std::uint32_t>(row, "ferns_used");
      report.per_attribute.push_back(entry);
    }
    if (report.per_attribute.size() != model.schema.size()) {
      throw Error(path + ": importance table does not match the schema");
    }
    model.importance = std::move(report);
  }
  return loaded;
}

}  // namespace ferns
