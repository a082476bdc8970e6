#include <cmath>
#include <memory>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dcp/kernel.hpp"
#include "dcp/partition.hpp"
#include "dcp/random.hpp"
#include "oracles.hpp"

using namespace dcp;

namespace {
using Labels = std::vector<std::optional<std::string>>;
std::optional<std::string> L(const char* s) { return std::string(s); }
}  // namespace

TEST(Canonicalize, Examples) {
  EXPECT_EQ(Partition::canonicalize({5, 5, 2, 2}).assignment(), (std::vector<int>{0, 0, 1, 1}));
  EXPECT_EQ(Partition::canonicalize({1, 2, 1, 2}).assignment(), (std::vector<int>{0, 1, 0, 1}));
  EXPECT_EQ(Partition::canonicalize({7}).assignment(), (std::vector<int>{0}));
  EXPECT_EQ(Partition::canonicalize({9, 3, 9, 4}).num_clusters(), 3);
}

TEST(Canonicalize, IdempotentAndInvariantUnderRelabelling) {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 12);
    std::vector<int> raw(n);
    for (auto& v : raw) v = static_cast<int>(uniform_index(rng, 5));
    const Partition p = Partition::canonicalize(raw);
    EXPECT_EQ(Partition::canonicalize(p.assignment()), p);
    std::vector<int> perm{0, 1, 2, 3, 4};
    shuffle(perm, rng);
    std::vector<int> relabelled(n);
    for (std::size_t i = 0; i < n; ++i) relabelled[i] = 100 + perm[static_cast<std::size_t>(raw[i])];
    EXPECT_EQ(Partition::canonicalize(relabelled), p);
  }
}

TEST(EnumeratePartitions, CountsMatchBellNumbers) {
  EXPECT_EQ(enumerate_partitions(1).size(), 1u);
  EXPECT_EQ(enumerate_partitions(3).size(), 5u);
  EXPECT_EQ(enumerate_partitions(4).size(), 15u);
  EXPECT_EQ(enumerate_partitions(7).size(), 877u);
}

TEST(EnumeratePartitions, MatchesBruteForceSetAndIsInRestrictedGrowthOrder) {
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto parts = enumerate_partitions(n);
    std::set<std::vector<int>> got;
    for (const auto& p : parts) got.insert(p.assignment());
    EXPECT_EQ(got.size(), parts.size()) << "duplicates at n=" << n;
    EXPECT_EQ(got, oracle::all_partitions_bruteforce(n));
    for (std::size_t i = 1; i < parts.size(); ++i) EXPECT_LT(parts[i - 1], parts[i]);
  }
}

TEST(EnumeratePartitions, GuardOnSize) { EXPECT_THROW(enumerate_partitions(13), InputError); }

TEST(Constraints, FromLabels) {
  const auto c = constraints_from_labels(Labels{L("A"), L("A"), L("B")});
  EXPECT_EQ(c.labeled_indices, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(c.co_matrix, (std::vector<std::uint8_t>{1, 1, 0, 1, 1, 0, 0, 0, 1}));

  const auto none = constraints_from_labels(Labels{std::nullopt, std::nullopt});
  EXPECT_TRUE(none.empty());
  EXPECT_TRUE(none.co_matrix.empty());

  const auto gap = constraints_from_labels(Labels{L("A"), std::nullopt, L("A")});
  EXPECT_EQ(gap.labeled_indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(gap.co_matrix, (std::vector<std::uint8_t>{1, 1, 1, 1}));
}

TEST(Constraints, Satisfaction) {
  const auto c = constraints_from_labels(Labels{L("A"), L("A"), L("B")});
  EXPECT_TRUE(satisfies_constraints(Partition::canonicalize({0, 0, 1}), c));
  EXPECT_FALSE(satisfies_constraints(Partition::canonicalize({0, 1, 1}), c));
  EXPECT_FALSE(satisfies_constraints(Partition::canonicalize({0, 0, 0}), c));
  EXPECT_TRUE(satisfies_constraints(Partition::canonicalize({3, 1, 2}), LabelConstraints{}));
}

TEST(Constraints, AnchorGroups) {
  const auto c = constraints_from_labels(Labels{L("x"), std::nullopt, L("y"), L("x")});
  const auto g = anchor_groups(c);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0], (std::vector<std::size_t>{0, 3}));
  EXPECT_EQ(g[1], (std::vector<std::size_t>{2}));
}

TEST(LogLikelihood, DeltaKernelIsUniformOverPartitions) {
  Eigen::MatrixXd pts(3, 1);
  pts << 0, 1, 2;
  const auto params = KernelParams::delta(2.0);
  const auto gram = std::make_shared<const Eigen::MatrixXd>(full_gram(pts, params));
  for (const auto& p : enumerate_partitions(3)) {
    ClusterState s(gram, p);
    EXPECT_NEAR(log_likelihood(s, params, {}), -3.0 * std::log(2.0), 1e-14);
  }
}

TEST(LogLikelihood, ViolatedConstraintsGiveLogZero) {
  Eigen::MatrixXd pts(3, 1);
  pts << 0, 1, 2;
  const auto params = KernelParams::squared_exponential({1.0});
  const auto c = constraints_from_labels(Labels{L("A"), L("A"), L("B")});
  ClusterState s(full_gram(pts, params), Partition::canonicalize({0, 1, 1}));
  EXPECT_TRUE(is_log_zero(log_likelihood(s, params, c)));
}

TEST(LogLikelihood, TemperatureScalesDifferences) {
  std::mt19937_64 rng(7);
  const auto pts = oracle::random_points(5, 2, rng);
  auto p1 = KernelParams::squared_exponential({1.0, 1.0}, 1.0);
  auto p2 = p1;
  p2.temperature = 2.0;
  const auto gram = std::make_shared<const Eigen::MatrixXd>(full_gram(pts, p1));
  const auto a = Partition::canonicalize({0, 0, 1, 1, 2});
  const auto b = Partition::canonicalize({0, 1, 1, 1, 0});
  const double d1 = log_likelihood(ClusterState(gram, a), p1, {}) -
                    log_likelihood(ClusterState(gram, b), p1, {});
  const double d2 = log_likelihood(ClusterState(gram, a), p2, {}) -
                    log_likelihood(ClusterState(gram, b), p2, {});
  EXPECT_NEAR(d2, 2.0 * d1, 1e-12);
}

TEST(LogLikelihood, ScalingTheKernelShiftsEveryPartitionEqually) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  const auto pts = oracle::random_points(5, 2, rng);
  const auto params = KernelParams::squared_exponential({0.7, 1.3}, 1.7);
  const Eigen::MatrixXd k = full_gram(pts, params);
  for (int trial = 0; trial < 10; ++trial) {
    const double alpha = u(rng);
    const Eigen::MatrixXd ks = alpha * k;
    for (const auto& p : enumerate_partitions(5)) {
      const double base = log_likelihood(ClusterState(k, p), params, {});
      const double scaled = log_likelihood(ClusterState(ks, p), params, {});
      EXPECT_NEAR(scaled - base, -params.temperature * 5.0 * std::log(alpha), 1e-8);
    }
  }
}

TEST(LogLikelihood, FiniteForEverySquaredExponentialPartition) {
  std::mt19937_64 rng(19);
  const auto pts = oracle::random_points(6, 2, rng);
  const auto params = KernelParams::squared_exponential({1.0, 1.0});
  const auto gram = std::make_shared<const Eigen::MatrixXd>(full_gram(pts, params));
  for (const auto& p : enumerate_partitions(6))
    EXPECT_TRUE(std::isfinite(log_likelihood(ClusterState(gram, p), params, {})));
}

TEST(ClusterState, TotalLogDetIsSumOfClusterLogDets) {
  std::mt19937_64 rng(21);
  const auto pts = oracle::random_points(7, 2, rng);
  const auto k = full_gram(pts, KernelParams::squared_exponential({1.0, 1.0}));
  const auto p = Partition::canonicalize({0, 1, 0, 2, 1, 0, 2});
  ClusterState s(k, p);
  EXPECT_NEAR(s.total_log_det(), partition_log_det(k, p), 1e-10);
  EXPECT_EQ(s.partition(), p);
}

TEST(ClusterState, MovesKeepCachesConsistent) {
  std::mt19937_64 rng(43);
  const auto pts = oracle::random_points(10, 2, rng);
  const auto k = full_gram(pts, KernelParams::squared_exponential({1.0, 1.0}));
  ClusterState s(k, Partition::singletons(10), /*rebuild_interval=*/0);
  Rng r(1);
  for (int step = 0; step < 500; ++step) {
    const std::size_t x = uniform_index(r, 10);
    s.remove_point(x);
    EXPECT_FALSE(s.assigned(x));
    s.add_point(x, uniform_index(r, s.num_clusters() + 1));
    EXPECT_LT(s.max_cache_error(), 1e-6);
  }
  EXPECT_NEAR(s.total_log_det(), partition_log_det(k, s.partition()), 1e-6);
}

TEST(ClusterState, SchurWithinMatchesSchurAfterRemoval) {
  std::mt19937_64 rng(47);
  const auto pts = oracle::random_points(6, 2, rng);
  const auto k = full_gram(pts, KernelParams::squared_exponential({1.0, 1.0}));
  ClusterState s(k, Partition::canonicalize({0, 0, 0, 1, 1, 0}));
  const double within = s.schur_within(2);
  s.remove_point(2);
  EXPECT_NEAR(within, s.schur(2, 0), 1e-12);
}

TEST(ClusterState, PeriodicRebuildResetsCounter) {
  std::mt19937_64 rng(53);
  const auto pts = oracle::random_points(5, 2, rng);
  const auto k = full_gram(pts, KernelParams::squared_exponential({1.0, 1.0}));
  ClusterState s(k, Partition::one_cluster(5), /*rebuild_interval=*/4);
  for (int i = 0; i < 3; ++i) s.move_point(static_cast<std::size_t>(i), 0);
  EXPECT_EQ(s.cluster(0).updates_since_rebuild, 2);  // 6 updates, rebuilt once at 4
}
