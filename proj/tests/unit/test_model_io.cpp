#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ferns/error.hpp"
#include "ferns/evaluate.hpp"
#include "ferns/model_io.hpp"
#include "ferns/predict.hpp"
#include "support/synthetic.hpp"

using namespace ferns;
using synthetic::TempDir;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Dataset mixed_dataset() {
  synthetic::DatasetBuilder b;
  b.continuous("x", {0.25, 1.5, 2.75, 3.125, 4.0, 5.5, 6.25, 7.75})
      .categorical("color", {"red", "green", "blue"},
                   {0, 1, 2, 0, 1, 2, 0, 1})
      .classes({"p", "q"}, {0, 0, 0, 0, 1, 1, 1, 1});
  return b.data;
}

Model trained_model(bool importance = true) {
  TrainOptions o;
  o.fern_count = 12;
  o.depth = 3;
  o.balanced = true;
  o.compute_importance = importance;
  o.seed = 99;
  o.workers = 1;
  return train(mixed_dataset(), o);
}

}  // namespace

TEST_CASE("save -> load -> save is byte-identical") {
  TempDir dir;
  const Model m = trained_model();

  OobSummary summary;
  summary.error_rate = 0.125;
  summary.covered_objects = 8;

  const auto first = dir.path("m1.json");
  save_model(m, first, summary);

  const LoadedModel loaded = load_model(first);
  const auto second = dir.path("m2.json");
  save_model(loaded.model, second, loaded.oob_summary);

  CHECK(slurp(first) == slurp(second));
  REQUIRE(loaded.oob_summary.has_value());
  CHECK(*loaded.oob_summary->error_rate == 0.125);
  CHECK(loaded.oob_summary->covered_objects == 8);
}

TEST_CASE("loaded models predict identically to the in-memory model") {
  TempDir dir;
  const Dataset d = mixed_dataset();
  const Model m = trained_model();
  const auto path = dir.path("m.json");
  save_model(m, path);
  const Model loaded = load_model(path).model;

  CHECK(loaded.fern_count == m.fern_count);
  CHECK(loaded.depth == m.depth);
  CHECK(loaded.balanced == m.balanced);
  CHECK(loaded.master_seed == m.master_seed);
  CHECK(loaded.class_names == m.class_names);
  CHECK(loaded.schema == m.schema);

  Scorer a(m, d), b(loaded, d);
  for (std::size_t i = 0; i < d.n_objects(); ++i) {
    CHECK(a.score(i) == b.score(i));  // bitwise through the decimal format
  }

  // importance survives the round trip
  const ImportanceReport& original = importance(m);
  const ImportanceReport& restored = importance(loaded);
  REQUIRE(original.per_attribute.size() == restored.per_attribute.size());
  for (std::size_t j = 0; j < original.per_attribute.size(); ++j) {
    CHECK(original.per_attribute[j].importance ==
          restored.per_attribute[j].importance);
    CHECK(original.per_attribute[j].ferns_used ==
          restored.per_attribute[j].ferns_used);
  }
}

TEST_CASE("loaded models carry no OOB accumulators") {
  TempDir dir;
  const Model m = trained_model(false);
  const auto path = dir.path("m.json");
  save_model(m, path);
  const Model loaded = load_model(path).model;
  CHECK(loaded.oob_scores.empty());
  CHECK_THROWS_AS(oob_report(loaded, mixed_dataset()), Error);
  CHECK_THROWS_AS(importance(loaded), Error);
}

TEST_CASE("format version mismatches are explicit errors") {
  TempDir dir;
  const Model m = trained_model(false);
  const auto path = dir.path("m.json");
  save_model(m, path);

  std::string text = slurp(path);
  const auto pos = text.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, std::string("\"format_version\": 1").size(),
               "\"format_version\": 99");
  const auto bad = dir.path("bad.json");
  std::ofstream(bad, std::ios::binary) << text;

  CHECK_THROWS_WITH_AS(load_model(bad), doctest::Contains("version"), Error);
}

TEST_CASE("corrupt model files are rejected with diagnostics") {
  TempDir dir;
  const auto path = dir.path("junk.json");
  std::ofstream(path, std::ios::binary) << "not json at all";
  CHECK_THROWS_AS(load_model(path), Error);

  std::ofstream(dir.path("empty.json"), std::ios::binary) << "{}";
  CHECK_THROWS_WITH_AS(load_model(dir.path("empty.json")),
                       doctest::Contains("format_version"), Error);

  CHECK_THROWS_AS(load_model(dir.path("missing.json")), Error);
}

TEST_CASE("saving requires a model that retains its ferns") {
  TrainOptions o;
  o.fern_count = 3;
  o.depth = 2;
  o.seed = 1;
  o.workers = 1;
  o.retain_ferns = false;
  const Model m = train(mixed_dataset(), o);
  TempDir dir;
  CHECK_THROWS_AS(save_model(m, dir.path("m.json")), Error);
}
