#include "ferns/predict.hpp"

#include <cmath>
#include <unordered_map>

#include "ferns/error.hpp"

namespace ferns {

Prior::Prior(std::vector<double> probabilities)
    : probabilities_(std::move(probabilities)) {
  if (probabilities_.empty()) throw Error("prior must not be empty");
  double total = 0.0;
  for (double p : probabilities_) {
    if (!(p > 0.0)) {
      throw Error("prior probabilities must be strictly positive");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error("prior probabilities must sum to 1");
  }
  logs_.reserve(probabilities_.size());
  for (double p : probabilities_) logs_.push_back(std::log(p));
}

ScoreVector apply_prior(const ScoreVector& scores, const Prior& prior) {
  if (scores.size() != prior.size()) {
    throw Error("prior and score vector differ in length");
  }
  ScoreVector out(scores.size());
  const auto logs = prior.log_probabilities();
  for (std::size_t y = 0; y < scores.size(); ++y) out[y] = scores[y] + logs[y];
  return out;
}

std::uint32_t argmax_class(const ScoreVector& scores) {
  if (scores.empty()) throw Error("empty score vector");
  std::size_t best = 0;
  for (std::size_t y = 1; y < scores.size(); ++y) {
    if (scores[y] > scores[best]) best = y;
  }
  return static_cast<std::uint32_t>(best);
}

Scorer::Scorer(const Model& model, const Table& data)
    : model_(&model), data_(&data) {
  if (model.ferns.size() != model.fern_count) {
    throw Error("model does not carry its ferns; cannot predict");
  }
  std::unordered_map<std::string_view, std::size_t> by_name;
  for (std::size_t j = 0; j < data.schema.size(); ++j) {
    by_name.emplace(data.schema[j].name, j);
  }

  column_of_.resize(model.schema.size());
  level_map_.resize(model.schema.size());
  for (std::size_t j = 0; j < model.schema.size(); ++j) {
    const AttributeSchema& attr = model.schema[j];
    auto it = by_name.find(attr.name);
    if (it == by_name.end()) {
      throw Error("attribute '" + attr.name + "' is missing from the data");
    }
    const std::size_t col = it->second;
    if (data.schema[col].kind != attr.kind) {
      throw Error("attribute '" + attr.name + "' is " +
                  (attr.kind == AttrKind::Continuous ? "continuous"
                                                     : "categorical") +
                  " in the model but not in the data");
    }
    column_of_[j] = static_cast<std::uint32_t>(col);
    if (attr.kind == AttrKind::Categorical) {
      std::unordered_map<std::string_view, std::int32_t> model_levels;
      for (std::size_t l = 0; l < attr.levels.size(); ++l) {
        model_levels.emplace(attr.levels[l], static_cast<std::int32_t>(l));
      }
      auto& remap = level_map_[j];
      remap.reserve(data.schema[col].levels.size());
      for (const std::string& label : data.schema[col].levels) {
        auto found = model_levels.find(label);
        remap.push_back(found == model_levels.end() ? -1 : found->second);
      }
    }
  }
}

ScoreVector Scorer::score(std::size_t row) const {
  const std::size_t n_classes = model_->n_classes();
  ScoreVector scores(n_classes, 0.0);
  for (const Fern& fern : model_->ferns) {
    std::uint32_t leaf = 0;
    for (std::size_t d = 0; d < fern.splits.size(); ++d) {
      const Split& split = fern.splits[d];
      const std::size_t col = column_of_[split.attribute];
      bool bit;
      if (const auto* t = std::get_if<ThresholdSplit>(&split.payload)) {
        bit = data_->continuous(col)[row] < t->threshold;
      } else {
        const std::uint8_t raw = data_->categorical(col)[row];
        const std::int32_t level = level_map_[split.attribute][raw];
        if (level < 0) {
          throw Error("object " + std::to_string(row + 1) + ": level '" +
                      data_->schema[col].levels[raw] + "' of attribute '" +
                      data_->schema[col].name + "' is unknown to the model");
        }
        bit = (std::get<LevelMaskSplit>(split.payload).mask >> level) & 1u;
      }
      if (bit) leaf |= 1u << d;
    }
    const double* fern_row = &fern.scores[std::size_t(leaf) * n_classes];
    for (std::size_t y = 0; y < n_classes; ++y) scores[y] += fern_row[y];
  }
  return scores;
}

std::uint32_t Scorer::classify(std::size_t row, const Prior* prior) const {
  ScoreVector s = score(row);
  if (prior) s = apply_prior(s, *prior);
  return argmax_class(s);
}

ScoreVector score(const Model& model, const Table& data, std::size_t row) {
  return Scorer(model, data).score(row);
}

std::uint32_t classify(const Model& model, const Table& data, std::size_t row,
                       const Prior* prior) {
  return Scorer(model, data).classify(row, prior);
}

}  // namespace ferns
