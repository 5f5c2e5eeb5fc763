#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ferns/ensemble.hpp"
#include "ferns/error.hpp"
#include "support/synthetic.hpp"

using namespace ferns;

TEST_CASE("a bag over one object is that object, with empty OOB") {
  RngStream rng(0, 0);
  const Bag bag = draw_bag(1, rng);
  CHECK(bag.indices == std::vector<std::uint32_t>{0});
  CHECK(bag.oob.empty());
}

TEST_CASE("bags are seed-stable") {
  RngStream r1(77, 3), r2(77, 3);
  const Bag a = draw_bag(500, r1);
  const Bag b = draw_bag(500, r2);
  CHECK(a.indices == b.indices);
  CHECK(a.oob == b.oob);
}

TEST_CASE("bag and OOB partition the objects") {
  RngStream rng(4, 1);
  const Bag bag = draw_bag(200, rng);
  CHECK(bag.indices.size() == 200);
  std::vector<bool> in_bag(200, false);
  for (auto i : bag.indices) in_bag[i] = true;
  for (auto i : bag.oob) CHECK(!in_bag[i]);
  std::size_t support = 0;
  for (bool b : in_bag) support += b;
  CHECK(support + bag.oob.size() == 200);
  CHECK(std::is_sorted(bag.oob.begin(), bag.oob.end()));
}

TEST_CASE("the OOB fraction matches the bagging expectation") {
  const std::uint32_t n = 1000;
  double total = 0.0;
  const int draws = 500;
  for (int k = 0; k < draws; ++k) {
    RngStream rng(99, k);
    total += static_cast<double>(draw_bag(n, rng).oob.size()) / n;
  }
  CHECK(std::abs(total / draws - 0.368) < 0.01);
}

TEST_CASE("train rejects an empty ensemble and bad depth") {
  RngStream gen(1, 0);
  const Dataset d = synthetic::separable_dataset(10, gen);
  TrainOptions options;
  options.fern_count = 0;
  CHECK_THROWS_AS(train(d, options), Error);
  options.fern_count = 1;
  options.depth = 0;
  CHECK_THROWS_AS(train(d, options), Error);
  options.depth = 17;
  CHECK_THROWS_AS(train(d, options), Error);
}

namespace {

TrainOptions small_options(std::uint32_t ferns, int depth,
                           std::uint64_t seed) {
  TrainOptions o;
  o.fern_count = ferns;
  o.depth = depth;
  o.balanced = false;
  o.seed = seed;
  o.workers = 1;
  return o;
}

bool models_identical(const Model& a, const Model& b) {
  if (a.oob_scores != b.oob_scores) return false;
  if (a.oob_votes != b.oob_votes) return false;
  if (a.ferns.size() != b.ferns.size()) return false;
  for (std::size_t k = 0; k < a.ferns.size(); ++k) {
    if (a.ferns[k].scores != b.ferns[k].scores) return false;
    if (a.ferns[k].splits.size() != b.ferns[k].splits.size()) return false;
    for (std::size_t d = 0; d < a.ferns[k].splits.size(); ++d) {
      if (a.ferns[k].splits[d].attribute != b.ferns[k].splits[d].attribute)
        return false;
      if (a.ferns[k].splits[d].payload != b.ferns[k].splits[d].payload)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("training is bit-identical across worker counts") {
  RngStream gen(2, 0);
  Dataset d = synthetic::separable_dataset(60, gen);

  auto serial = small_options(120, 4, 7);
  auto threaded = small_options(120, 4, 7);
  threaded.workers = 8;
  threaded.compute_importance = true;
  serial.compute_importance = true;

  const Model a = train(d, serial);
  const Model b = train(d, threaded);
  CHECK(models_identical(a, b));
  REQUIRE(a.importance.has_value());
  REQUIRE(b.importance.has_value());
  for (std::size_t j = 0; j < a.importance->per_attribute.size(); ++j) {
    CHECK(a.importance->per_attribute[j].importance ==
          b.importance->per_attribute[j].importance);
    CHECK(a.importance->per_attribute[j].ferns_used ==
          b.importance->per_attribute[j].ferns_used);
  }
}

TEST_CASE("fern k depends only on (seed, k, data, depth, balanced)") {
  RngStream gen(3, 0);
  Dataset d = synthetic::separable_dataset(30, gen);
  const Model ten = train(d, small_options(10, 3, 42));
  const Model eight = train(d, small_options(8, 3, 42));
  REQUIRE(ten.ferns.size() == 10);
  REQUIRE(eight.ferns.size() == 8);
  CHECK(ten.ferns[7].scores == eight.ferns[7].scores);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ten.ferns[7].splits[i].attribute == eight.ferns[7].splits[i].attribute);
    CHECK(ten.ferns[7].splits[i].payload == eight.ferns[7].splits[i].payload);
  }
}

TEST_CASE("vote counts sum to the total OOB mass") {
  RngStream gen(8, 0);
  Dataset d = synthetic::separable_dataset(25, gen);
  const auto options = small_options(40, 2, 5);
  const Model m = train(d, options);

  std::uint64_t votes = std::accumulate(m.oob_votes.begin(), m.oob_votes.end(),
                                        std::uint64_t(0));
  std::uint64_t oob_mass = 0;
  for (std::uint32_t k = 0; k < options.fern_count; ++k) {
    RngStream rng(options.seed, k);
    oob_mass += draw_bag(static_cast<std::uint32_t>(d.n_objects()), rng)
                    .oob.size();
  }
  CHECK(votes == oob_mass);
}

TEST_CASE("dropping fern retention changes nothing but the fern list") {
  RngStream gen(12, 0);
  Dataset d = synthetic::separable_dataset(20, gen);
  auto keep = small_options(30, 3, 9);
  auto drop = small_options(30, 3, 9);
  drop.retain_ferns = false;
  const Model a = train(d, keep);
  const Model b = train(d, drop);
  CHECK(b.ferns.empty());
  CHECK(a.oob_scores == b.oob_scores);
  CHECK(a.oob_votes == b.oob_votes);
}

TEST_CASE("workers=0 resolves to hardware concurrency and still matches") {
  RngStream gen(21, 0);
  Dataset d = synthetic::separable_dataset(15, gen);
  auto base = small_options(25, 2, 3);
  auto poolsized = base;
  poolsized.workers = 0;
  CHECK(models_identical(train(d, base), train(d, poolsized)));
}
