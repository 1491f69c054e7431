#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "altmin/instance.hpp"
#include "altmin/metrics.hpp"
#include "altmin/random.hpp"

namespace altmin {
namespace {

// Entrywise oracle for (1/n) ||M - X Y^T||_F.
double brute_rms(const Factors& x, const Factors& y, const Instance& inst) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      double m = 0.0, p = 0.0;
      for (Eigen::Index k = 0; k < x.cols(); ++k) {
        m += inst.alpha(i, k) * inst.beta(j, k);
        p += x(i, k) * y(j, k);
      }
      sum += (m - p) * (m - p);
    }
  }
  return std::sqrt(sum) / static_cast<double>(inst.n);
}

TEST(Rms, ZeroAtGroundTruth) {
  const auto inst = gen_rank1_instance(10, 0.01, complete_bipartite(10, 10), 1);
  EXPECT_EQ(rms(inst.alpha, inst.beta, inst), 0.0);
}

TEST(Rms, SingleEntry) {
  const auto inst = make_instance(Factors::Ones(1, 1), Factors::Ones(1, 1), complete_bipartite(1, 1), 0, 0);
  EXPECT_DOUBLE_EQ(rms(Factors::Zero(1, 1), Factors::Zero(1, 1), inst), 1.0);
}

TEST(Rms, MatchesEntrywiseOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index r = 1 + trial % 3;
    const auto inst = gen_rank_r_instance(2 + static_cast<std::size_t>(trial), r,
                                          complete_bipartite(2 + static_cast<std::size_t>(trial), 2 + static_cast<std::size_t>(trial)),
                                          static_cast<std::uint64_t>(trial));
    Factors x(inst.alpha.rows(), r), y(inst.beta.rows(), r);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = rng.uniform(-2, 2);
    for (Eigen::Index k = 0; k < y.size(); ++k) y.data()[k] = rng.uniform(-2, 2);
    const double want = brute_rms(x, y, inst);
    EXPECT_NEAR(rms(x, y, inst), want, 1e-9 * want);
    EXPECT_NEAR(RmsOracle(inst)(x, y), want, 1e-9 * want);
  }
}

TEST(Rms, GaugeInvariant) {
  const auto inst = gen_rank1_instance(8, 0.01, complete_bipartite(8, 8), 2);
  Factors x = Factors::Constant(8, 1, 0.3), y = Factors::Constant(8, 1, 0.7);
  const double base = rms(x, y, inst);
  for (double c : {2.0, -0.5, 1e3}) {
    const Factors xs = x * c, ys = y / c;
    EXPECT_NEAR(rms(xs, ys, inst), base, 1e-12 * base);
  }
}

TEST(Rms, RejectsDimensionMismatch) {
  const auto inst = gen_rank1_instance(4, 0.1, complete_bipartite(4, 4), 2);
  EXPECT_THROW(rms(Factors::Ones(3, 1), Factors::Ones(4, 1), inst), std::invalid_argument);
  EXPECT_THROW(rms(Factors::Ones(4, 2), Factors::Ones(4, 2), inst), std::invalid_argument);
}

TEST(Objective, Examples) {
  const auto inst = gen_rank1_instance(6, 0.1, gen_random_regular_bipartite(6, 2, 1), 3);
  EXPECT_EQ(objective(inst.alpha, inst.beta, inst.view()), 0.0);

  const auto one = make_instance(Factors::Ones(1, 1), Factors::Ones(1, 1), complete_bipartite(1, 1), 0, 0);
  Factors x = Factors::Constant(1, 1, 3.0);
  EXPECT_DOUBLE_EQ(objective(x, Factors::Ones(1, 1), one.view()), 4.0);
}

TEST(Objective, CountsObservedEntriesOnly) {
  // Residuals off the graph do not enter the objective.
  const BipartiteGraph g(2, 2, {{0, 0}, {1, 1}});
  const auto inst = make_instance(Factors::Ones(2, 1), Factors::Ones(2, 1), g, 0, 0);
  Factors x(2, 1), y(2, 1);
  x << 1, 2;
  y << 1, 0.5;
  EXPECT_EQ(objective(x, y, inst.view()), 0.0);
  EXPECT_GT(rms(x, y, inst), 0.0);
}

TEST(SubspaceDistance, Examples) {
  const std::vector<double> u{1.0, 0.0}, v{0.0, 1.0}, w{3.0, 4.0}, w2{-6.0, -8.0};
  EXPECT_DOUBLE_EQ(subspace_distance(u, v), 1.0);
  EXPECT_NEAR(subspace_distance(w, w2), 0.0, 1e-15);
  EXPECT_NEAR(subspace_distance(w, u), subspace_distance(u, w), 1e-15);
  EXPECT_NEAR(subspace_distance(w, u), 1.0 - 9.0 / 25.0, 1e-15);
}

TEST(SubspaceDistance, SplitVectorsAtHalf) {
  const double b = 0.5;
  std::vector<double> alpha, x;
  for (int i = 0; i < 10; ++i) {
    alpha.push_back(i < 5 ? b : 1 / b);
    x.push_back(i < 5 ? 1 / b : b);
  }
  EXPECT_NEAR(subspace_distance(x, alpha), 0.778546712802768, 1e-12);
}

TEST(SubspaceDistance, RejectsDegenerateInput) {
  const std::vector<double> zero{0.0, 0.0}, one{1.0, 0.0}, three{1.0, 2.0, 3.0};
  EXPECT_THROW(subspace_distance(zero, one), std::invalid_argument);
  EXPECT_THROW(subspace_distance(one, three), std::invalid_argument);
}

TEST(Spread, Examples) {
  const std::vector<double> constant(7, 2.5);
  EXPECT_EQ(spread(constant), 0.0);
  const double b = 0.2;
  const std::vector<double> pair{b * b, 1 / (b * b)};
  EXPECT_DOUBLE_EQ(spread(pair), 1 / (b * b) - b * b);
  Rng rng(5);
  std::vector<double> w(5);
  for (auto& v : w) v = rng.uniform(0.1, 3.0);
  double lo = w[0], hi = w[0];
  for (double v : w) lo = std::min(lo, v), hi = std::max(hi, v);
  EXPECT_EQ(spread(w), hi - lo);
  EXPECT_THROW(spread(std::vector<double>{}), std::invalid_argument);
}

TEST(MetricReport, RankOneFieldsPopulated) {
  const auto inst = gen_rank1_instance(10, 0.01, gen_random_regular_bipartite(10, 3, 1), 2);
  FactorState s{inst.alpha * 2.0, inst.beta, 0};
  const auto rep = metric_report(s, inst);
  ASSERT_TRUE(rep.subspace_dist_x.has_value());
  EXPECT_NEAR(*rep.subspace_dist_x, 0.0, 1e-12);
  EXPECT_NEAR(*rep.spread_u, 0.0, 1e-12);
  EXPECT_GT(rep.rms, 0.0);
  EXPECT_GT(rep.objective, 0.0);

  const auto r2 = gen_rank_r_instance(10, 2, complete_bipartite(10, 10), 2);
  const auto rep2 = metric_report(FactorState{r2.alpha, r2.beta, 0}, r2);
  EXPECT_FALSE(rep2.subspace_dist_x.has_value());
  EXPECT_EQ(rep2.rms, 0.0);
}

}  // namespace
}  // namespace altmin
