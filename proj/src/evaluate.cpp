#include "ferns/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ferns/error.hpp"
#include "ferns/predict.hpp"

namespace ferns {

OobReport oob_report(const Model& model, const Dataset& data) {
  const std::size_t n = data.n_objects();
  const std::size_t n_classes = model.n_classes();
  if (model.oob_votes.size() != n ||
      model.oob_scores.size() != n * n_classes ||
      data.n_classes() != n_classes) {
    throw Error(
        "model OOB accumulators do not match the dataset (was the model "
        "loaded from a file or trained on different data?)");
  }

  OobReport report;
  report.predictions.assign(n, -1);
  report.confusion.assign(n_classes * n_classes, 0);
  std::uint32_t wrong = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (model.oob_votes[i] == 0) continue;  // never out of bag: undefined
    const double* row = &model.oob_scores[i * n_classes];
    std::size_t best = 0;
    for (std::size_t y = 1; y < n_classes; ++y) {
      if (row[y] > row[best]) best = y;
    }
    report.predictions[i] = static_cast<std::int32_t>(best);
    ++report.covered_objects;
    ++report.confusion[data.decision[i] * n_classes + best];
    if (best != data.decision[i]) ++wrong;
  }
  if (report.covered_objects > 0) {
    report.error_rate = static_cast<double>(wrong) /
                        static_cast<double>(report.covered_objects);
  }
  return report;
}

const ImportanceReport& importance(const Model& model) {
  if (!model.importance) {
    throw Error("model was trained without importance computation");
  }
  return *model.importance;
}

double importance_delta(const Fern& fern, const Dataset& data,
                        std::span<const std::uint32_t> oob,
                        std::uint32_t attribute,
                        std::span<const std::uint32_t> permutation) {
  if (oob.size() != permutation.size()) {
    throw Error("permutation length must match the OOB set");
  }
  if (oob.empty()) throw Error("importance needs a non-empty OOB set");
  const std::size_t n_classes = data.n_classes();

  // bits owned by splits on the permuted attribute
  std::uint32_t attr_bits = 0;
  for (std::size_t d = 0; d < fern.splits.size(); ++d) {
    if (fern.splits[d].attribute == attribute) attr_bits |= 1u << d;
  }
  if (attr_bits == 0) return 0.0;  // fern does not reference the attribute

  double drop = 0.0;
  for (std::size_t t = 0; t < oob.size(); ++t) {
    const std::uint32_t obj = oob[t];
    const std::uint32_t source = oob[permutation[t]];  // permuted value donor
    const std::uint32_t base = leaf_index(fern.splits, data, obj);
    std::uint32_t permuted = base & ~attr_bits;
    for (std::size_t d = 0; d < fern.splits.size(); ++d) {
      const Split& split = fern.splits[d];
      if (split.attribute != attribute) continue;
      bool bit;
      if (const auto* thr = std::get_if<ThresholdSplit>(&split.payload)) {
        bit = data.continuous(attribute)[source] < thr->threshold;
      } else {
        bit = (std::get<LevelMaskSplit>(split.payload).mask >>
               data.categorical(attribute)[source]) &
              1u;
      }
      if (bit) permuted |= 1u << d;
    }
    const std::uint32_t y = data.decision[obj];
    drop += fern.scores[std::size_t(base) * n_classes + y] -
            fern.scores[std::size_t(permuted) * n_classes + y];
  }
  return drop / static_cast<double>(oob.size());
}

std::vector<std::pair<std::uint32_t, double>> fern_importance_pass(
    const Fern& fern, const Dataset& data, std::span<const std::uint32_t> oob,
    std::uint64_t master_seed, std::uint32_t fern_index) {
  std::vector<std::uint32_t> attrs;
  attrs.reserve(fern.splits.size());
  for (const Split& s : fern.splits) attrs.push_back(s.attribute);
  std::sort(attrs.begin(), attrs.end());
  attrs.erase(std::unique(attrs.begin(), attrs.end()), attrs.end());

  std::vector<std::pair<std::uint32_t, double>> result;
  result.reserve(attrs.size());
  std::vector<std::uint32_t> permutation(oob.size());
  for (std::uint32_t a : attrs) {
    std::iota(permutation.begin(), permutation.end(), 0);
    RngStream rng(master_seed, importance_stream_id(fern_index, a));
    rng.shuffle(std::span<std::uint32_t>(permutation));
    result.emplace_back(a, importance_delta(fern, data, oob, a, permutation));
  }
  return result;
}

namespace {

std::pair<double, double> mean_stddev(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

constexpr std::uint64_t kCrossvalSplitSalt = 0x43567370ULL;
constexpr std::uint64_t kCrossvalTrainSalt = 0x43567472ULL;
constexpr std::uint64_t kSweepSalt = 0x53575045ULL;

}  // namespace

CrossvalResult crossval(const Dataset& data, const CrossvalOptions& options) {
  if (options.folds == 0) throw Error("fold count must be at least 1");

  CrossvalResult result;
  result.errors.reserve(options.folds);
  for (std::uint32_t fold = 0; fold < options.folds; ++fold) {
    RngStream split_rng(options.seed, mix64(kCrossvalSplitSalt ^ fold));
    auto [train_part, test_part] =
        split_stratified(data, options.test_fraction, split_rng);

    TrainOptions train_options;
    train_options.fern_count = options.fern_count;
    train_options.depth = options.depth;
    train_options.balanced = options.balanced;
    train_options.seed = mix64(options.seed ^ mix64(kCrossvalTrainSalt ^ fold));
    train_options.workers = options.workers;
    Model model = train(train_part, train_options);

    Scorer scorer(model, test_part);
    std::uint32_t wrong = 0;
    for (std::size_t i = 0; i < test_part.n_objects(); ++i) {
      if (scorer.classify(i) != test_part.decision[i]) ++wrong;
    }
    result.errors.push_back(static_cast<double>(wrong) /
                            static_cast<double>(test_part.n_objects()));
  }
  std::tie(result.mean, result.stddev) = mean_stddev(result.errors);
  return result;
}

DepthSweepResult depth_sweep(const Dataset& data, const SweepOptions& options) {
  if (options.depths.empty()) throw Error("depth sweep needs at least one depth");
  if (options.repetitions == 0) throw Error("repetition count must be at least 1");

  DepthSweepResult result;
  result.rows.reserve(options.depths.size());
  for (int depth : options.depths) {
    std::vector<double> errors;
    errors.reserve(options.repetitions);
    for (std::uint32_t rep = 0; rep < options.repetitions; ++rep) {
      TrainOptions train_options;
      train_options.fern_count = options.fern_count;
      train_options.depth = depth;
      train_options.balanced = options.balanced;
      train_options.seed = mix64(
          options.seed ^
          mix64(kSweepSalt ^ (std::uint64_t(depth) << 32) ^ rep));
      train_options.workers = options.workers;
      train_options.retain_ferns = false;  // OOB error is all we keep
      Model model = train(data, train_options);
      const OobReport report = oob_report(model, data);
      if (report.error_rate) errors.push_back(*report.error_rate);
    }
    if (errors.empty()) {
      throw Error("no defined OOB error at depth " + std::to_string(depth) +
                  " (no object was ever out of bag)");
    }
    DepthSweepRow row;
    row.depth = depth;
    std::tie(row.mean_oob_error, row.stddev) = mean_stddev(errors);
    result.rows.push_back(row);
  }

  const auto best = std::min_element(
      result.rows.begin(), result.rows.end(), [](const auto& a, const auto& b) {
        return a.mean_oob_error < b.mean_oob_error ||
               (a.mean_oob_error == b.mean_oob_error && a.depth < b.depth);
      });
  result.best_depth = best->depth;
  return result;
}

}  // namespace ferns
