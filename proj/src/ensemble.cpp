#include "ferns/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>

#include "ferns/error.hpp"
#include "ferns/evaluate.hpp"

namespace ferns {

Bag draw_bag(std::uint32_t n_objects, RngStream& rng) {
  if (n_objects == 0) throw Error("cannot draw a bag from 0 objects");
  Bag bag;
  bag.indices.reserve(n_objects);
  std::vector<bool> in_bag(n_objects, false);
  for (std::uint32_t i = 0; i < n_objects; ++i) {
    const auto j = static_cast<std::uint32_t>(rng.below(n_objects));
    bag.indices.push_back(j);
    in_bag[j] = true;
  }
  for (std::uint32_t j = 0; j < n_objects; ++j) {
    if (!in_bag[j]) bag.oob.push_back(j);
  }
  return bag;
}

namespace {

// Everything one fern contributes to the model; merged in fern-index order
// so that accumulated floating-point sums do not depend on the worker count.
struct FernOutcome {
  Fern fern;
  std::vector<std::uint32_t> oob;
  std::vector<std::uint16_t> oob_leaf;
  std::vector<std::uint32_t> attrs_used;                       // distinct, sorted
  std::vector<std::pair<std::uint32_t, double>> importance;    // (attr, mean drop)
};

FernOutcome build_fern(const Dataset& data, const TrainOptions& options,
                       std::uint32_t fern_index) {
  const auto n = static_cast<std::uint32_t>(data.n_objects());
  const std::size_t n_classes = data.n_classes();

  RngStream rng(options.seed, fern_index);
  Bag bag = draw_bag(n, rng);
  FernOutcome out;
  out.fern.splits = generate_splits(data, options.depth, rng);

  const std::vector<std::uint16_t> leaf_all(leaf_indices(out.fern.splits, data));

  std::vector<std::uint16_t> leaf_of_bag(bag.indices.size());
  std::vector<std::uint32_t> class_of_bag(bag.indices.size());
  std::vector<std::uint32_t> bag_class_counts(n_classes, 0);
  for (std::size_t i = 0; i < bag.indices.size(); ++i) {
    const std::uint32_t obj = bag.indices[i];
    leaf_of_bag[i] = leaf_all[obj];
    class_of_bag[i] = data.decision[obj];
    ++bag_class_counts[data.decision[obj]];
  }
  out.fern.scores = fit_scores(leaf_of_bag, class_of_bag, bag_class_counts,
                               options.depth, n_classes, options.balanced);

  out.oob = std::move(bag.oob);
  out.oob_leaf.resize(out.oob.size());
  for (std::size_t i = 0; i < out.oob.size(); ++i) {
    out.oob_leaf[i] = leaf_all[out.oob[i]];
  }

  out.attrs_used.reserve(out.fern.splits.size());
  for (const Split& s : out.fern.splits) out.attrs_used.push_back(s.attribute);
  std::sort(out.attrs_used.begin(), out.attrs_used.end());
  out.attrs_used.erase(
      std::unique(out.attrs_used.begin(), out.attrs_used.end()),
      out.attrs_used.end());

  if (options.compute_importance && !out.oob.empty()) {
    out.importance = fern_importance_pass(out.fern, data, out.oob,
                                          options.seed, fern_index);
  }
  return out;
}

struct ImportanceAccumulator {
  std::vector<double> sum;
  std::vector<std::uint32_t> contributing;  // ferns with a non-empty OOB set
  std::vector<std::uint32_t> used;          // ferns referencing the attribute

  explicit ImportanceAccumulator(std::size_t n_attributes)
      : sum(n_attributes, 0.0),
        contributing(n_attributes, 0),
        used(n_attributes, 0) {}

  ImportanceReport finalize() const {
    ImportanceReport report;
    report.per_attribute.resize(sum.size());
    for (std::size_t a = 0; a < sum.size(); ++a) {
      auto& entry = report.per_attribute[a];
      entry.ferns_used = used[a];
      if (contributing[a] > 0) {
        entry.importance = sum[a] / static_cast<double>(contributing[a]);
      }
    }
    return report;
  }
};

void merge_outcome(Model& model, ImportanceAccumulator& importance,
                   FernOutcome&& out, bool retain, bool track_importance) {
  const std::size_t n_classes = model.n_classes();
  for (std::size_t i = 0; i < out.oob.size(); ++i) {
    const double* row = &out.fern.scores[std::size_t(out.oob_leaf[i]) * n_classes];
    double* acc = &model.oob_scores[std::size_t(out.oob[i]) * n_classes];
    for (std::size_t y = 0; y < n_classes; ++y) acc[y] += row[y];
    ++model.oob_votes[out.oob[i]];
  }
  if (track_importance) {
    for (std::uint32_t a : out.attrs_used) ++importance.used[a];
    for (const auto& [a, delta] : out.importance) {
      importance.sum[a] += delta;
      ++importance.contributing[a];
    }
  }
  if (retain) model.ferns.push_back(std::move(out.fern));
}

}  // namespace

Model train(const Dataset& data, const TrainOptions& options) {
  if (options.fern_count == 0) throw Error("fern count must be at least 1");
  if (options.depth < 1 || options.depth > kMaxDepth) {
    throw Error("depth must lie in [1, " + std::to_string(kMaxDepth) + "]");
  }
  const std::size_t n = data.n_objects();
  if (n == 0) throw Error("cannot train on an empty dataset");
  if (data.n_classes() < 2) throw Error("training needs at least 2 classes");

  Model model;
  model.schema = data.schema;
  model.class_names = data.class_names;
  model.fern_count = options.fern_count;
  model.depth = options.depth;
  model.balanced = options.balanced;
  model.master_seed = options.seed;
  model.oob_scores.assign(n * data.n_classes(), 0.0);
  model.oob_votes.assign(n, 0);
  if (options.retain_ferns) model.ferns.reserve(options.fern_count);

  ImportanceAccumulator importance(data.n_attributes());

  unsigned workers = options.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

  const std::uint32_t total = options.fern_count;
  if (workers == 1) {
    for (std::uint32_t k = 0; k < total; ++k) {
      merge_outcome(model, importance, build_fern(data, options, k),
                    options.retain_ferns, options.compute_importance);
    }
  } else {
    // Ferns are built in waves: workers fill a wave buffer in any order,
    // then the buffer is merged serially by fern index.
    const std::uint32_t wave =
        std::min<std::uint32_t>(total, std::max<std::uint32_t>(workers * 16, 64));
    std::vector<FernOutcome> buffer(wave);
    for (std::uint32_t start = 0; start < total; start += wave) {
      const std::uint32_t count = std::min(wave, total - start);
      std::atomic<std::uint32_t> cursor{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      auto work = [&] {
        try {
          for (;;) {
            const std::uint32_t i = cursor.fetch_add(1);
            if (i >= count) break;
            buffer[i] = build_fern(data, options, start + i);
          }
        } catch (...) {
          std::scoped_lock lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      };
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
      if (failure) std::rethrow_exception(failure);
      for (std::uint32_t i = 0; i < count; ++i) {
        merge_outcome(model, importance, std::move(buffer[i]),
                      options.retain_ferns, options.compute_importance);
      }
    }
  }

  if (options.compute_importance) model.importance = importance.finalize();
  return model;
}

}  // namespace ferns
