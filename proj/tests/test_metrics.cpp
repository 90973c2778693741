#include <doctest.h>

#include <cmath>

#include "affect/metrics.hpp"
#include "affect/rng.hpp"
#include "support/test_data.hpp"

using namespace affect;

namespace {

EmotionDistribution dist(std::array<double, kNumEmotions> p) {
  EmotionDistribution d;
  d.probs = p;
  return d;
}

const EmotionDistribution kUniform = EmotionDistribution::uniform();
const EmotionDistribution kOneHot = dist({1, 0, 0, 0, 0, 0, 0});

}  // namespace

TEST_CASE("kld identity is zero") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto p = test::random_distribution(rng);
    CHECK(kld(p, p) <= 1e-12);
  }
}

TEST_CASE("kld analytic values") {
  // ln 2 on the 2-class toy embedded in 7 slots; remaining mass zero.
  const auto p = dist({1, 0, 0, 0, 0, 0, 0});
  const auto q = dist({0.5, 0.5, 0, 0, 0, 0, 0});
  CHECK(kld(p, q) == doctest::Approx(0.6931471805599453).epsilon(1e-6));
  // one-hot vs uniform: ln 7.
  CHECK(kld(kOneHot, kUniform) == doctest::Approx(1.9459101090932196).epsilon(1e-6));
}

TEST_CASE("kld nonnegative and direction sensitive") {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const auto p = test::random_distribution(rng);
    const auto q = test::random_distribution(rng);
    CHECK(kld(p, q) >= 0.0);
  }
}

TEST_CASE("kld rejects bad smoothing") {
  CHECK_THROWS_AS(kld(kUniform, kUniform, 0.0), ValidationError);
}

TEST_CASE("bhattacharyya identity and bounds") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto p = test::random_distribution(rng);
    const auto q = test::random_distribution(rng);
    const double b = bhattacharyya(p, q);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0 + 1e-12);
    CHECK(bhattacharyya(p, q) == doctest::Approx(bhattacharyya(q, p)).epsilon(1e-12));
    CHECK(bhattacharyya(p, p) >= 1.0 - 1e-12);
  }
}

TEST_CASE("bhattacharyya analytic values") {
  CHECK(bhattacharyya(kUniform, kOneHot) == doctest::Approx(0.3779644730092272).epsilon(1e-6));
  const auto a = dist({1, 0, 0, 0, 0, 0, 0});
  const auto b = dist({0, 1, 0, 0, 0, 0, 0});
  CHECK(bhattacharyya(a, b) == 0.0);
}

TEST_CASE("accuracy") {
  CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(accuracy({1, 2, 3}, {2, 3, 1}) == 0.0);
  std::vector<int> pred(25, 0), truth(25, 0);
  for (int i = 13; i < 25; ++i) pred[static_cast<size_t>(i)] = 1;  // 13 of 25 agree
  CHECK(accuracy(pred, truth) == doctest::Approx(0.52));
  CHECK_THROWS_AS(accuracy({1}, {1, 2}), ValidationError);
  CHECK_THROWS_AS(accuracy({}, {}), ValidationError);
}

TEST_CASE("aad") {
  CHECK(aad({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(aad({1.5, 2.5}, {1.0, 2.0}) == doctest::Approx(0.5));
  CHECK(aad({1, 3}, {2, 5}) == doctest::Approx(1.5));
  CHECK_THROWS_AS(aad({1}, {1, 2}), ValidationError);
}

TEST_CASE("accuracy and aad invariant to common permutation") {
  Rng rng(11);
  std::vector<int> pred, truth;
  std::vector<double> ps, ts;
  for (int i = 0; i < 40; ++i) {
    pred.push_back(rng.uniform_int(4));
    truth.push_back(rng.uniform_int(4));
    ps.push_back(rng.uniform01());
    ts.push_back(rng.uniform01());
  }
  const double acc0 = accuracy(pred, truth);
  const double aad0 = aad(ps, ts);
  std::vector<int> order(40);
  for (int i = 0; i < 40; ++i) order[static_cast<size_t>(i)] = i;
  rng.shuffle(order);
  std::vector<int> pred2, truth2;
  std::vector<double> ps2, ts2;
  for (int i : order) {
    pred2.push_back(pred[static_cast<size_t>(i)]);
    truth2.push_back(truth[static_cast<size_t>(i)]);
    ps2.push_back(ps[static_cast<size_t>(i)]);
    ts2.push_back(ts[static_cast<size_t>(i)]);
  }
  CHECK(accuracy(pred2, truth2) == doctest::Approx(acc0).epsilon(1e-15));
  CHECK(aad(ps2, ts2) == doctest::Approx(aad0).epsilon(1e-12));
}

TEST_CASE("per-class TPR") {
  SUBCASE("perfect") {
    const auto tpr = per_class_tpr({0, 1, 2}, {0, 1, 2}, 3);
    for (const auto& t : tpr) CHECK(*t == 1.0);
  }
  SUBCASE("absent class undefined") {
    const auto tpr = per_class_tpr({0, 0}, {0, 0}, 2);
    CHECK(*tpr[0] == 1.0);
    CHECK_FALSE(tpr[1].has_value());
  }
  SUBCASE("partial") {
    const auto tpr = per_class_tpr({0, 1, 1}, {0, 0, 1}, 2);
    CHECK(*tpr[0] == doctest::Approx(0.5));
    CHECK(*tpr[1] == doctest::Approx(1.0));
  }
}

TEST_CASE("evaluation report means equal mean of rows") {
  Rng rng(21);
  std::vector<std::string> ids;
  std::vector<EmotionDistribution> pred, truth;
  for (int i = 0; i < 30; ++i) {
    ids.push_back("r" + std::to_string(i));
    pred.push_back(test::random_distribution(rng));
    truth.push_back(test::random_distribution(rng));
  }
  const auto report = evaluate_distributions(ids, pred, truth);
  double kld_sum = 0.0, bc_sum = 0.0;
  for (const auto& r : report.records) {
    kld_sum += r.kld;
    bc_sum += r.bc;
  }
  CHECK(report.mean_kld == doctest::Approx(kld_sum / 30.0).epsilon(1e-12));
  CHECK(report.mean_bc == doctest::Approx(bc_sum / 30.0).epsilon(1e-12));
}

TEST_CASE("base-2 log flag rescales kld") {
  const double nat = kld(kOneHot, kUniform);
  const auto report = evaluate_distributions({"a"}, {kUniform}, {kOneHot}, kDefaultKldSmoothing, 2.0);
  CHECK(report.records[0].kld == doctest::Approx(nat / std::log(2.0)).epsilon(1e-9));
}
