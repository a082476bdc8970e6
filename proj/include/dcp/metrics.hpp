#pragma once

// Partition agreement scores, a k-means baseline, and posterior summaries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dcp/error.hpp"
#include "dcp/partition.hpp"
#include "dcp/random.hpp"
#include "dcp/sampler.hpp"

namespace dcp {

struct ContingencyTable {
  std::vector<std::vector<std::size_t>> counts;  // rows: clusters of p, cols: clusters of q
  std::vector<std::size_t> row_sums;
  std::vector<std::size_t> col_sums;
  std::size_t total = 0;

  ContingencyTable(const Partition& p, const Partition& q) {
    if (p.size() != q.size()) throw InputError("contingency table: partition sizes differ");
    const auto r = static_cast<std::size_t>(p.num_clusters());
    const auto c = static_cast<std::size_t>(q.num_clusters());
    counts.assign(r, std::vector<std::size_t>(c, 0));
    row_sums.assign(r, 0);
    col_sums.assign(c, 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto a = static_cast<std::size_t>(p[i]);
      const auto b = static_cast<std::size_t>(q[i]);
      ++counts[a][b];
      ++row_sums[a];
      ++col_sums[b];
    }
    total = p.size();
  }
};

namespace detail {
inline double choose2(std::size_t n) {
  return 0.5 * static_cast<double>(n) * (static_cast<double>(n) - 1.0);
}
inline double entropy(std::span<const std::size_t> sums, std::size_t total) {
  double h = 0.0;
  const double n = static_cast<double>(total);
  for (std::size_t s : sums)
    if (s > 0) {
      const double pr = static_cast<double>(s) / n;
      h -= pr * std::log(pr);
    }
  return h;
}
}  // namespace detail

// Hubert-Arabie adjusted Rand index. When the chance-corrected denominator is
// zero (both partitions trivial) the score is 1 for identical partitions and 0
// otherwise.
inline double adjusted_rand_index(const Partition& p, const Partition& q) {
  if (p.size() != q.size()) throw InputError("ARI: partition sizes differ");
  if (p.size() < 2) throw InputError("ARI is undefined for fewer than two points");
  const ContingencyTable t(p, q);
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& row : t.counts)
    for (std::size_t n : row) index += detail::choose2(n);
  for (std::size_t a : t.row_sums) sum_a += detail::choose2(a);
  for (std::size_t b : t.col_sums) sum_b += detail::choose2(b);
  const double expected = sum_a * sum_b / detail::choose2(t.total);
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return p == q ? 1.0 : 0.0;
  return (index - expected) / denom;
}

// Mutual information over the arithmetic mean of the two entropies (natural
// log). Two single-cluster partitions score 1.
inline double normalized_mutual_information(const Partition& p, const Partition& q) {
  if (p.size() != q.size()) throw InputError("NMI: partition sizes differ");
  if (p.size() == 0) throw InputError("NMI of empty partitions is undefined");
  const ContingencyTable t(p, q);
  const double n = static_cast<double>(t.total);
  const double hp = detail::entropy(t.row_sums, t.total);
  const double hq = detail::entropy(t.col_sums, t.total);
  if (hp == 0.0 && hq == 0.0) return p == q ? 1.0 : 0.0;
  double mi = 0.0;
  for (std::size_t a = 0; a < t.counts.size(); ++a)
    for (std::size_t b = 0; b < t.counts[a].size(); ++b) {
      const std::size_t nab = t.counts[a][b];
      if (nab == 0) continue;
      const double pab = static_cast<double>(nab) / n;
      mi += pab * std::log(static_cast<double>(nab) * n /
                           (static_cast<double>(t.row_sums[a]) * static_cast<double>(t.col_sums[b])));
    }
  const double nmi = mi / (0.5 * (hp + hq));
  return std::clamp(nmi, 0.0, 1.0);
}

struct KMeansResult {
  Partition partition;
  Eigen::MatrixXd centroids;
  std::vector<double> objective;  // within-cluster sum of squares after each assignment step
  std::size_t iterations = 0;
};

inline constexpr std::size_t kKMeansMaxIterations = 300;

// Lloyd's algorithm from k-means++ seeding. An empty cluster is re-seeded at
// the point farthest from its current centroid.
inline KMeansResult kmeans_detailed(const Eigen::MatrixXd& points, std::size_t k,
                                    std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1 || k > n) throw InputError("kmeans: need 1 <= k <= N");
  Rng rng = make_stream(seed, "kmeans");
  const auto row = [&](std::size_t i) { return points.row(static_cast<Eigen::Index>(i)); };

  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), points.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  std::size_t first = uniform_index(rng, n);
  centroids.row(0) = row(first);
  chosen[first] = true;
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (row(i) - centroids.row(static_cast<Eigen::Index>(c - 1))).squaredNorm());
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (u < d2[i]) {
          pick = i;
          break;
        }
        u -= d2[i];
      }
    }
    if (pick == n || chosen[pick]) {
      // All remaining mass is on already-chosen points; take any unchosen one.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) free.push_back(i);
      pick = free[uniform_index(rng, free.size())];
    }
    chosen[pick] = true;
    centroids.row(static_cast<Eigen::Index>(c)) = row(pick);
  }

  KMeansResult res;
  std::vector<std::size_t> assign(n, k);
  for (std::size_t it = 0; it < kKMeansMaxIterations; ++it) {
    bool changed = false;
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (row(i) - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[i] != best) changed = true;
      assign[i] = best;
      obj += bd;
    }
    res.objective.push_back(obj);
    res.iterations = it + 1;
    if (!changed) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), points.cols());
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(assign[i])) += row(i);
      ++sizes[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c)
      if (sizes[c] > 0)
        centroids.row(static_cast<Eigen::Index>(c)) =
            sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = n;
      double fd = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assign[i]] < 2) continue;
        const double d =
            (row(i) - centroids.row(static_cast<Eigen::Index>(assign[i]))).squaredNorm();
        if (d > fd) {
          fd = d;
          far = i;
        }
      }
      --sizes[assign[far]];
      assign[far] = c;
      sizes[c] = 1;
      centroids.row(static_cast<Eigen::Index>(c)) = row(far);
    }
  }
  res.partition = Partition::canonicalize(assign);
  res.centroids = std::move(centroids);
  return res;
}

inline Partition kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed) {
  return kmeans_detailed(points, k, seed).partition;
}

struct PosteriorSummary {
  std::map<int, double> cluster_count_histogram;
  Eigen::MatrixXd co_occurrence;
  std::optional<double> mean_ari;
  std::optional<double> mean_nmi;
  std::size_t num_samples = 0;
};

// Posterior cluster-count frequencies and co-clustering frequencies. With a
// ground truth, also the mean per-sample ARI/NMI on `test_indices` (all
// points when not given).
inline PosteriorSummary summarize(const PosteriorTrace& trace,
                                  const std::optional<Partition>& truth = std::nullopt,
                                  const std::optional<std::vector<std::size_t>>& test_indices =
                                      std::nullopt) {
  if (trace.samples.empty()) throw InputError("summarize: trace has no samples");
  const std::size_t n = trace.samples.front().partition.size();
  const double s = static_cast<double>(trace.samples.size());
  PosteriorSummary out;
  out.num_samples = trace.samples.size();
  out.co_occurrence = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& sample : trace.samples) {
    const Partition& p = sample.partition;
    if (p.size() != n) throw InputError("summarize: samples disagree on point count");
    out.cluster_count_histogram[p.num_clusters()] += 1.0 / s;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (p.same_cluster(i, j))
          out.co_occurrence(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += 1.0;
  }
  out.co_occurrence /= s;
  if (truth) {
    if (truth->size() != n) throw InputError("summarize: truth has wrong length");
    std::vector<std::size_t> idx;
    if (test_indices) {
      idx = *test_indices;
    } else {
      idx.resize(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    }
    const Partition t = truth->restrict_to(idx);
    double ari = 0.0, nmi = 0.0;
    for (const auto& sample : trace.samples) {
      const Partition q = sample.partition.restrict_to(idx);
      ari += adjusted_rand_index(t, q);
      nmi += normalized_mutual_information(t, q);
    }
    out.mean_ari = ari / s;
    out.mean_nmi = nmi / s;
  }
  return out;
}

}  // namespace dcp
