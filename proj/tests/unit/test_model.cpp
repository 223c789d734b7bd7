#include <cmath>
#include <numeric>
#include <sstream>

#include "crc/calibration.hpp"
#include "crc/error.hpp"
#include "crc/model.hpp"
#include "crc/synthetic.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace crc;

namespace {

FeatureSchema schema_of(std::initializer_list<int> cards, int r) {
  const std::vector<int> v(cards);
  return FeatureSchema::make(v, r);
}

NBParams two_gaussians(double mu) {
  NBParams p;
  p.class_probs = {0.5, 0.5};
  p.features.emplace_back(GaussianTable{{{mu, 1.0}, {-mu, 1.0}}});
  return p;
}

}  // namespace

TEST_CASE("stat_map_instance: discrete indicator layout") {
  const auto s = stat_map_instance(schema_of({2}, 2), std::vector<double>{0}, 1);
  CHECK(s.class_count(0) == 0);
  CHECK(s.class_count(1) == 1);
  CHECK(s.count(0, 0, 0) == 0);
  CHECK(s.count(0, 0, 1) == 0);
  CHECK(s.count(0, 1, 0) == 1);
  CHECK(s.count(0, 1, 1) == 0);
  CHECK(s.values().size() == 2 + 4);
}

TEST_CASE("stat_map_instance: continuous moment triple") {
  const auto s = stat_map_instance(schema_of({0}, 2), std::vector<double>{3.0}, 0);
  CHECK(s.class_count(0) == 1);
  CHECK(s.class_count(1) == 0);
  CHECK(s.moment(0, 0, 0) == 1);
  CHECK(s.moment(0, 0, 1) == 3);
  CHECK(s.moment(0, 0, 2) == 9);
  for (int k = 0; k < 3; ++k) CHECK(s.moment(0, 1, k) == 0);
}

TEST_CASE("stat_map_instance: mixed schema fills only row y") {
  const auto s = stat_map_instance(schema_of({3, 0}, 3), std::vector<double>{2, -1.5}, 2);
  for (int y = 0; y < 2; ++y) {
    CHECK(s.class_count(y) == 0);
    for (int x = 0; x < 3; ++x) CHECK(s.count(0, y, x) == 0);
    for (int k = 0; k < 3; ++k) CHECK(s.moment(1, y, k) == 0);
  }
  CHECK(s.count(0, 2, 2) == 1);
  CHECK(s.moment(1, 2, 1) == -1.5);
  CHECK(s.moment(1, 2, 2) == 2.25);
  CHECK_THROWS_AS(stat_map_instance(schema_of({3, 0}, 3), std::vector<double>{3, 0}, 0), Error);
}

TEST_CASE("stat_map_dataset: additivity, ess and permutation invariance") {
  Rng rng(5);
  const auto schema = schema_of({2, 0, 4}, 3);
  const auto data = oracle::random_dataset(schema, 60, rng);

  const auto twice = data.subset(std::vector<std::size_t>{7, 7});
  const auto once = stat_map_instance(schema, data.row(7), data.label(7));
  CHECK(stat_map_dataset(twice) == once * 2.0);

  CHECK(stat_map_dataset(data).ess() == 60.0);

  std::vector<std::size_t> first(25), second(35);
  std::iota(first.begin(), first.end(), 0);
  std::iota(second.begin(), second.end(), 25);
  const auto split_sum = stat_map_dataset(data.subset(first)) + stat_map_dataset(data.subset(second));
  CHECK(oracle::max_relative_deviation(split_sum.values(), stat_map_dataset(data).values()) < 1e-13);

  // Integer-valued features make every sum exact, so order cannot matter.
  const auto discrete = oracle::random_dataset(schema_of({3, 2}, 2), 40, rng);
  std::vector<std::size_t> order(40);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  CHECK(stat_map_dataset(discrete.subset(order)) == stat_map_dataset(discrete));
  std::vector<std::size_t> head(15), tail(25);
  std::iota(head.begin(), head.end(), 0);
  std::iota(tail.begin(), tail.end(), 15);
  CHECK(stat_map_dataset(discrete.subset(head)) + stat_map_dataset(discrete.subset(tail)) == stat_map_dataset(discrete));

  CHECK_THROWS_AS(stat_map_dataset(Dataset(schema)), Error);
}

TEST_CASE("prob_stat_map: uniform posterior splits each instance evenly") {
  const auto schema = schema_of({0}, 2);
  Dataset data(schema);
  data.add(std::vector<double>{3.0}, 0);
  const auto s = prob_stat_map(data, param_map(uniform_init(schema, 10.0)));
  for (int y = 0; y < 2; ++y) {
    CHECK(s.class_count(y) == 0.5);
    CHECK(s.moment(0, y, 0) == 0.5);
    CHECK(s.moment(0, y, 1) == 1.5);
    CHECK(s.moment(0, y, 2) == 4.5);
  }
}

TEST_CASE("prob_stat_map: point-mass posteriors reproduce the labeled statistics") {
  const auto schema = schema_of({0, 0}, 2);
  Dataset data(schema);
  data.add(std::vector<double>{40.0, 41.0}, 0);
  data.add(std::vector<double>{-40.0, -39.5}, 1);
  data.add(std::vector<double>{39.0, 38.0}, 0);
  NBParams p;
  p.class_probs = {0.5, 0.5};
  p.features.emplace_back(GaussianTable{{{40.0, 1.0}, {-40.0, 1.0}}});
  p.features.emplace_back(GaussianTable{{{40.0, 1.0}, {-40.0, 1.0}}});
  CHECK(prob_stat_map(data, p) == stat_map_dataset(data));
}

TEST_CASE("prob_stat_map: two instances against exact oracles") {
  SUBCASE("discrete, exact rational arithmetic") {
    const auto schema = schema_of({3, 2}, 3);
    Dataset data(schema);
    data.add(std::vector<double>{0, 1}, 0);
    data.add(std::vector<double>{2, 0}, 2);
    NBParams p;
    p.class_probs = {0.2, 0.3, 0.5};
    p.features.emplace_back(CategoricalTable{3, {0.1, 0.6, 0.3, 0.25, 0.25, 0.5, 0.7, 0.2, 0.1}});
    p.features.emplace_back(CategoricalTable{2, {0.9, 0.1, 0.4, 0.6, 0.5, 0.5}});
    const auto got = prob_stat_map(data, p);
    const auto want = oracle::prob_stat_map_rational(data, p);
    CHECK(oracle::max_relative_deviation(got.values(), want.values()) < 1e-12);
  }
  SUBCASE("mixed, high precision") {
    const auto schema = schema_of({2, 0}, 2);
    Dataset data(schema);
    data.add(std::vector<double>{1, 0.25}, 0);
    data.add(std::vector<double>{0, -1.75}, 1);
    NBParams p;
    p.class_probs = {0.4, 0.6};
    p.features.emplace_back(CategoricalTable{2, {0.3, 0.7, 0.8, 0.2}});
    p.features.emplace_back(GaussianTable{{{0.5, 2.0}, {-1.0, 0.5}}});
    const auto got = prob_stat_map(data, p);
    const auto want = oracle::prob_stat_map_mp(data, p);
    CHECK(oracle::max_relative_deviation(got.values(), want.values()) < 1e-12);
  }
}

TEST_CASE("prob_stat_map: ess equals the number of instances") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto schema = oracle::random_schema(rng, 4, 4);
    const auto data = oracle::random_dataset(schema, 30, rng);
    const auto s = prob_stat_map(data, oracle::random_params(schema, rng));
    CHECK(std::abs(s.ess() - 30.0) < 1e-9 * 30.0);
  }
}

TEST_CASE("param_map examples") {
  auto s = StatsVector(schema_of({2, 0}, 2));
  s.class_count(0) = 3;
  s.class_count(1) = 1;
  s.count(0, 0, 0) = 2;
  s.count(0, 0, 1) = 2;
  s.count(0, 1, 0) = 1;
  s.count(0, 1, 1) = 3;
  s.moment(1, 0, 0) = 2;
  s.moment(1, 0, 1) = 4;
  s.moment(1, 0, 2) = 10;
  s.moment(1, 1, 0) = 1;
  s.moment(1, 1, 1) = 0;
  s.moment(1, 1, 2) = 1;
  const auto p = param_map(s);
  CHECK(p.class_probs == std::vector<double>{0.75, 0.25});
  const auto& table = std::get<CategoricalTable>(p.features[0]);
  CHECK(table.prob(0, 0) == 0.5);
  CHECK(table.prob(0, 1) == 0.5);
  CHECK(table.prob(1, 1) == 0.75);
  const auto& g = std::get<GaussianTable>(p.features[1]).per_class;
  CHECK(g[0].mean == 2.0);
  CHECK(g[0].var == 1.0);
  CHECK(g[1].var == 1.0);
}

TEST_CASE("param_map rejects unprojected statistics") {
  auto s = uniform_init(schema_of({2}, 2), 10.0);
  s.count(0, 1, 0) = 0.0;
  CHECK_THROWS_AS(param_map(s), Error);
  auto t = uniform_init(schema_of({0}, 2), 10.0);
  t.class_count(1) = -1.0;
  CHECK_THROWS_AS(param_map(t), Error);
}

TEST_CASE("param_map output invariants on random projected statistics") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const auto schema = oracle::random_schema(rng, 5, 4);
    auto s = stat_map_dataset(oracle::random_dataset(schema, 5, rng));
    for (auto& v : s.values()) v += rng.normal();
    project_in_place(s);
    const auto p = param_map(s);
    CHECK(std::abs(std::accumulate(p.class_probs.begin(), p.class_probs.end(), 0.0) - 1.0) < 1e-12);
    for (const auto& f : p.features) {
      if (const auto* t = std::get_if<CategoricalTable>(&f)) {
        for (int y = 0; y < p.num_classes(); ++y) {
          double row = 0.0;
          for (int x = 0; x < t->cardinality; ++x) row += t->prob(y, x);
          CHECK(std::abs(row - 1.0) < 1e-12);
        }
      } else {
        for (const auto& g : std::get<GaussianTable>(f).per_class) CHECK(g.var >= kVarianceFloor);
      }
    }
  }
}

TEST_CASE("param_map is invariant to positive scaling") {
  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const auto schema = oracle::random_schema(rng, 4, 3);
    const auto s = stat_map_dataset(oracle::random_dataset(schema, 40, rng)) + uniform_init(schema, 1.0);
    const double c = std::exp(rng.normal() * 3.0);
    const auto a = oracle::flatten(param_map(s));
    const auto b = oracle::flatten(param_map(s * c));
    CHECK(oracle::max_relative_deviation(a, b) < 1e-12);
  }
}

TEST_CASE("posterior: symmetric Gaussians") {
  const auto p = two_gaussians(1.0);
  const auto at0 = posterior(p, std::vector<double>{0.0});
  CHECK(at0[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(at0[1] == doctest::Approx(0.5).epsilon(1e-15));
  // log-odds are 2x here, so p(+1 | x=1) = 1 / (1 + e^-2).
  const double expected = 1.0 / (1.0 + std::exp(-2.0));
  const auto at1 = posterior(p, std::vector<double>{1.0});
  CHECK(std::abs(at1[0] - expected) < 1e-15);
  CHECK(std::abs(at1[0] - 0.8808) < 1e-4);
  const auto mp = oracle::posterior_mp(p, std::vector<double>{1.0});
  CHECK(std::abs(at1[0] - mp[0]) < 1e-15);
}

TEST_CASE("posterior: identical class-conditionals give the prior") {
  NBParams p;
  p.class_probs = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  p.features.emplace_back(CategoricalTable{2, {0.2, 0.8, 0.2, 0.8, 0.2, 0.8}});
  p.features.emplace_back(GaussianTable{{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}});
  const auto post = posterior(p, std::vector<double>{1, 7.5});
  for (double v : post) CHECK(std::abs(v - 1.0 / 3) < 1e-15);
}

TEST_CASE("posterior normalization and agreement with the high-precision oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const auto schema = oracle::random_schema(rng, 6, 5);
    const auto params = oracle::random_params(schema, rng);
    const auto data = oracle::random_dataset(schema, 1, rng);
    const auto post = posterior(params, data.row(0));
    CHECK(std::abs(std::accumulate(post.begin(), post.end(), 0.0) - 1.0) < 1e-12);
    const auto mp = oracle::posterior_mp(params, data.row(0));
    CHECK(oracle::max_abs_deviation(post, mp) < 1e-12);
  }
}

TEST_CASE("posterior stays finite in high dimension") {
  std::vector<int> cards(512, 0);
  const auto schema = FeatureSchema::make(cards, 2);
  Rng rng(37);
  auto s = stat_map_dataset(oracle::random_dataset(schema, 20, rng));
  project_in_place(s);
  const auto params = param_map(s);
  std::vector<double> x(512, 50.0);
  const auto post = posterior(params, x);
  CHECK(std::isfinite(post[0]));
  CHECK(std::isfinite(post[1]));
  CHECK(std::abs(post[0] + post[1] - 1.0) < 1e-12);
}

TEST_CASE("argmax and predict") {
  CHECK(argmax(std::vector<double>{0.9, 0.1}) == 0);
  CHECK(argmax(std::vector<double>{0.5, 0.5}) == 0);
  CHECK(argmax(std::vector<double>{0.2, 0.5, 0.3}) == 1);
  CHECK(predict(two_gaussians(1.0), std::vector<double>{-2.0}) == 1);
  CHECK(predict(two_gaussians(1.0), std::vector<double>{0.0}) == 0);
}

TEST_CASE("uniform_init examples") {
  const auto d = uniform_init(schema_of({4}, 2), 1000.0);
  CHECK(d.class_count(0) == 500);
  CHECK(d.class_count(1) == 500);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 4; ++x) CHECK(d.count(0, y, x) == 125);
  }
  const auto c = uniform_init(schema_of({0}, 2), 1000.0);
  for (int y = 0; y < 2; ++y) {
    CHECK(c.moment(0, y, 0) == 500);
    CHECK(c.moment(0, y, 1) == 0);
    CHECK(c.moment(0, y, 2) == 500);
    const auto params = param_map(c);
    const auto& g = std::get<GaussianTable>(params.features[0]).per_class[static_cast<std::size_t>(y)];
    CHECK(g.mean == 0.0);
    CHECK(g.var == 1.0);
  }
  CHECK(uniform_init(schema_of({3, 0, 2}, 3), 7.5).ess() == doctest::Approx(7.5).epsilon(1e-15));
  CHECK_THROWS_AS(uniform_init(schema_of({0}, 2), 0.0), Error);
  CHECK_THROWS_AS(uniform_init(schema_of({0}, 2), -1.0), Error);
}

TEST_CASE("uniform_init posterior is uniform at random probes") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const auto schema = oracle::random_schema(rng, 6, 5);
    const auto params = param_map(uniform_init(schema, 1.0 + 1000.0 * rng.uniform01()));
    const auto x = oracle::random_dataset(schema, 1, rng);
    const auto post = posterior(params, x.row(0));
    const double r = schema.num_classes();
    for (double v : post) CHECK(std::abs(v - 1.0 / r) < 1e-12);
  }
}

TEST_CASE("evaluate examples") {
  const auto schema = schema_of({0}, 2);
  Dataset data(schema);
  data.add(std::vector<double>{40.0}, 0);
  data.add(std::vector<double>{-40.0}, 1);
  data.add(std::vector<double>{38.0}, 0);
  NBParams perfect;
  perfect.class_probs = {0.5, 0.5};
  perfect.features.emplace_back(GaussianTable{{{40.0, 1.0}, {-40.0, 1.0}}});
  const auto e = evaluate(perfect, data);
  CHECK(e.err01 == 0.0);
  CHECK(e.soft == 0.0);

  const auto u = evaluate(param_map(uniform_init(schema, 5.0)), data);
  CHECK(u.soft == 0.5);
  CHECK(u.err01 == doctest::Approx(1.0 / 3));  // ties go to class 1

  CHECK_THROWS_AS(evaluate(perfect, Dataset(schema)), Error);
}

TEST_CASE("evaluate matches per-instance enumeration") {
  const auto schema = schema_of({2, 0}, 2);
  Dataset data(schema);
  data.add(std::vector<double>{0, 0.3}, 0);
  data.add(std::vector<double>{1, -0.8}, 1);
  data.add(std::vector<double>{1, 1.2}, 0);
  data.add(std::vector<double>{0, -0.1}, 1);
  NBParams p;
  p.class_probs = {0.55, 0.45};
  p.features.emplace_back(CategoricalTable{2, {0.7, 0.3, 0.35, 0.65}});
  p.features.emplace_back(GaussianTable{{{0.5, 1.0}, {-0.5, 1.5}}});
  const auto got = evaluate(p, data);
  const auto want = oracle::evaluate_by_enumeration(p, data);
  CHECK(got.err01 == want.err01);
  CHECK(std::abs(got.soft - want.soft) < 1e-14);

  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = oracle::random_schema(rng, 4, 4);
    const auto d = oracle::random_dataset(s, 25, rng);
    const auto q = oracle::random_params(s, rng);
    const auto a = evaluate(q, d);
    const auto b = oracle::evaluate_by_enumeration(q, d);
    CHECK(a.err01 == b.err01);
    CHECK(std::abs(a.soft - b.soft) < 1e-12);
  }
}

TEST_CASE("project examples") {
  const auto schema = schema_of({2, 0}, 2);
  auto valid = uniform_init(schema, 10.0);
  auto copy = valid;
  CHECK_FALSE(project_in_place(copy));
  CHECK(copy == valid);

  auto s = valid;
  s.count(0, 1, 0) = -0.3;
  CHECK(project_in_place(s));
  CHECK(s.count(0, 1, 0) == kCountFloor);

  auto t = valid;
  t.moment(1, 0, 0) = 2.0;
  t.moment(1, 0, 1) = 2.0;  // mean 1
  t.moment(1, 0, 2) = 1.0;  // variance 0.5 - 1 = -0.5
  CHECK(project_in_place(t));
  const double mean = t.moment(1, 0, 1) / t.moment(1, 0, 0);
  CHECK(t.moment(1, 0, 2) / t.moment(1, 0, 0) - mean * mean == doctest::Approx(kVarianceFloor).epsilon(1e-9));
  CHECK(t.moment(1, 0, 2) > 1.0);
}

TEST_CASE("project is idempotent") {
  Rng rng(47);
  for (int trial = 0; trial < 200; ++trial) {
    const auto schema = oracle::random_schema(rng, 4, 3);
    auto s = uniform_init(schema, 3.0);
    for (auto& v : s.values()) v = rng.normal() * 3.0;
    const auto once = project(s);
    CHECK(project(once) == once);
  }
}

TEST_CASE("StatsVector arithmetic requires matching layouts") {
  auto a = uniform_init(schema_of({2}, 2), 4.0);
  const auto b = uniform_init(schema_of({3}, 2), 4.0);
  CHECK_THROWS_AS(a += b, Error);
  const auto c = uniform_init(schema_of({2}, 2), 2.0);  // separately built, same shape
  a += c;
  CHECK(a.ess() == 6.0);
  a -= c;
  CHECK(a.ess() == 4.0);
}

TEST_CASE("dump formats") {
  const auto s = uniform_init(schema_of({2, 0}, 2), 8.0);
  const auto text = dump_string(s);
  CHECK(text.find("class_count[1] = 4\n") != std::string::npos);
  CHECK(text.find("feature[1].count[y=2][x=2] = 2\n") != std::string::npos);
  CHECK(text.find("feature[2].moment[y=1][2] = 4\n") != std::string::npos);
  const auto p = dump_string(param_map(s));
  CHECK(p.find("class_prob[2] = 0.5\n") != std::string::npos);
  CHECK(p.find("feature[1].prob[y=1][x=2] = 0.5\n") != std::string::npos);
  CHECK(p.find("feature[2].mean[y=2] = 0\n") != std::string::npos);
  CHECK(p.find("feature[2].var[y=1] = 1\n") != std::string::npos);
}
