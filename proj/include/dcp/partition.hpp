#pragma once

// Set partitions, label constraints, and the per-cluster inverse caches that
// the Gibbs sampler works on.

#include <algorithm>
#include <cassert>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcp/error.hpp"
#include "dcp/kernel.hpp"
#include "dcp/linalg.hpp"

namespace dcp {

// Log-weight of an impossible configuration.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline bool is_log_zero(double v) { return v == kLogZero; }

// A set partition in canonical form: cluster ids are 0..M-1 in order of first
// occurrence, so equal set partitions compare equal.
class Partition {
 public:
  Partition() = default;

  // Relabels arbitrary ids into canonical form.
  template <class Id>
  static Partition canonicalize(std::span<const Id> raw) {
    Partition p;
    p.assignment_.resize(raw.size());
    std::map<Id, int> ids;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      auto [it, inserted] = ids.emplace(raw[i], static_cast<int>(ids.size()));
      p.assignment_[i] = it->second;
    }
    p.num_clusters_ = static_cast<int>(ids.size());
    return p;
  }

  template <class Id>
  static Partition canonicalize(const std::vector<Id>& raw) {
    return canonicalize(std::span<const Id>(raw));
  }

  static Partition canonicalize(std::initializer_list<int> raw) {
    return canonicalize(std::vector<int>(raw));
  }

  static Partition singletons(std::size_t n) {
    std::vector<int> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = static_cast<int>(i);
    return canonicalize(a);
  }

  static Partition one_cluster(std::size_t n) { return canonicalize(std::vector<int>(n, 0)); }

  std::size_t size() const { return assignment_.size(); }
  int num_clusters() const { return num_clusters_; }
  const std::vector<int>& assignment() const { return assignment_; }
  int operator[](std::size_t i) const { return assignment_[i]; }

  bool same_cluster(std::size_t i, std::size_t j) const {
    return assignment_[i] == assignment_[j];
  }

  std::vector<std::vector<std::size_t>> clusters() const {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(num_clusters_));
    for (std::size_t i = 0; i < assignment_.size(); ++i)
      out[static_cast<std::size_t>(assignment_[i])].push_back(i);
    return out;
  }

  // Sub-partition on the given points, re-canonicalized.
  Partition restrict_to(std::span<const std::size_t> indices) const {
    std::vector<int> sub;
    sub.reserve(indices.size());
    for (std::size_t i : indices) {
      if (i >= assignment_.size()) throw InputError("restrict_to: index out of range");
      sub.push_back(assignment_[i]);
    }
    return canonicalize(sub);
  }

  // Maps a partition of representatives back onto the original rows.
  Partition expand(std::span<const std::size_t> representative) const {
    std::vector<int> out;
    out.reserve(representative.size());
    for (std::size_t r : representative) out.push_back(assignment_.at(r));
    return canonicalize(out);
  }

  std::string to_string(char sep = '|') const {
    std::string s;
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
      if (i) s += sep;
      s += std::to_string(assignment_[i]);
    }
    return s;
  }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.assignment_ == b.assignment_;
  }
  friend auto operator<=>(const Partition& a, const Partition& b) {
    return a.assignment_ <=> b.assignment_;
  }
  friend std::ostream& operator<<(std::ostream& os, const Partition& p) {
    return os << '[' << p.to_string(',') << ']';
  }

 private:
  std::vector<int> assignment_;
  int num_clusters_ = 0;
};

struct PartitionHash {
  std::size_t operator()(const Partition& p) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (int v : p.assignment()) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ull;
    return h;
  }
};

// Every set partition of n items, in restricted-growth-string order.
inline constexpr std::size_t kMaxEnumerable = 12;

inline std::vector<Partition> enumerate_partitions(std::size_t n) {
  if (n > kMaxEnumerable)
    throw InputError("enumerate_partitions: n = " + std::to_string(n) + " exceeds limit of " +
                     std::to_string(kMaxEnumerable));
  std::vector<Partition> out;
  if (n == 0) {
    out.emplace_back();
    return out;
  }
  // a[i] <= 1 + max(a[0..i-1]); b[i] holds that running max plus one.
  std::vector<int> a(n, 0), b(n, 1);
  while (true) {
    out.push_back(Partition::canonicalize(a));
    std::size_t i = n - 1;
    while (i > 0 && a[i] == b[i]) --i;
    if (i == 0) break;
    ++a[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      a[j] = 0;
      b[j] = std::max(b[j - 1], a[j - 1] + 1);
    }
  }
  return out;
}

// Observed co-membership among labelled points.
struct LabelConstraints {
  std::vector<std::size_t> labeled_indices;
  std::vector<std::uint8_t> co_matrix;  // row-major |Z| x |Z|

  std::size_t size() const { return labeled_indices.size(); }
  bool empty() const { return labeled_indices.empty(); }
  bool together(std::size_t i, std::size_t j) const {
    return co_matrix[i * labeled_indices.size() + j] != 0;
  }
};

inline LabelConstraints constraints_from_labels(
    std::span<const std::optional<std::string>> labels) {
  LabelConstraints c;
  std::vector<const std::string*> vals;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i]) {
      c.labeled_indices.push_back(i);
      vals.push_back(&*labels[i]);
    }
  const std::size_t z = vals.size();
  c.co_matrix.assign(z * z, 0);
  for (std::size_t i = 0; i < z; ++i)
    for (std::size_t j = 0; j < z; ++j) c.co_matrix[i * z + j] = (*vals[i] == *vals[j]) ? 1 : 0;
  return c;
}

inline LabelConstraints constraints_from_labels(
    const std::vector<std::optional<std::string>>& labels) {
  return constraints_from_labels(std::span<const std::optional<std::string>>(labels));
}

inline bool satisfies_constraints(const Partition& p, const LabelConstraints& c) {
  const std::size_t z = c.size();
  for (std::size_t i = 0; i < z; ++i) {
    const std::size_t a = c.labeled_indices[i];
    if (a >= p.size()) return false;
    for (std::size_t j = i + 1; j < z; ++j)
      if (p.same_cluster(a, c.labeled_indices[j]) != c.together(i, j)) return false;
  }
  return true;
}

// Groups of labelled points that must share a cluster, in order of first
// labelled member.
inline std::vector<std::vector<std::size_t>> anchor_groups(const LabelConstraints& c) {
  std::vector<std::vector<std::size_t>> groups;
  std::vector<int> group_of(c.size(), -1);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (group_of[i] >= 0) continue;
    group_of[i] = static_cast<int>(groups.size());
    groups.push_back({c.labeled_indices[i]});
    for (std::size_t j = i + 1; j < c.size(); ++j)
      if (group_of[j] < 0 && c.together(i, j)) {
        group_of[j] = group_of[i];
        groups.back().push_back(c.labeled_indices[j]);
      }
  }
  return groups;
}

// Sum over clusters of log det of the cluster Gram block, computed directly.
inline double partition_log_det(const Eigen::MatrixXd& gram, const Partition& p) {
  double total = 0.0;
  for (const auto& members : p.clusters()) {
    const auto n = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd block(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        block(i, j) = gram(static_cast<Eigen::Index>(members[static_cast<std::size_t>(i)]),
                           static_cast<Eigen::Index>(members[static_cast<std::size_t>(j)]));
    try {
      total += cholesky_logdet_only(block);
    } catch (const NotPositiveDefinite&) {
      total += rebuild_cache(block).log_det;
    }
  }
  return total;
}

// Unnormalized log-density -tau * sum log det(K_S) of a partition, or
// kLogZero if it violates the constraints.
inline double partition_log_density(const Eigen::MatrixXd& gram, const Partition& p,
                                    double temperature,
                                    const LabelConstraints* constraints = nullptr) {
  if (constraints && !satisfies_constraints(p, *constraints)) return kLogZero;
  return -temperature * partition_log_det(gram, p);
}

// Mutable clustering of N points with a cached Gram inverse per cluster.
// Points may be temporarily unassigned while the sampler relocates them.
class ClusterState {
 public:
  struct Cluster {
    std::vector<std::size_t> members;
    PDMatrixCache cache;
    int updates_since_rebuild = 0;
  };

  static constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();

  ClusterState(std::shared_ptr<const Eigen::MatrixXd> gram, const Partition& p,
               int rebuild_interval = 64)
      : gram_(std::move(gram)), owner_(p.size(), kUnassigned), rebuild_interval_(rebuild_interval) {
    if (!gram_ || gram_->rows() != gram_->cols() ||
        static_cast<std::size_t>(gram_->rows()) != p.size())
      throw InputError("ClusterState: Gram matrix does not match partition size");
    for (auto& members : p.clusters()) {
      Cluster c;
      c.members = std::move(members);
      for (std::size_t i : c.members) owner_[i] = clusters_.size();
      clusters_.push_back(std::move(c));
      rebuild(clusters_.size() - 1);
    }
  }

  ClusterState(Eigen::MatrixXd gram, const Partition& p, int rebuild_interval = 64)
      : ClusterState(std::make_shared<const Eigen::MatrixXd>(std::move(gram)), p,
                     rebuild_interval) {}

  std::size_t size() const { return owner_.size(); }
  std::size_t num_clusters() const { return clusters_.size(); }
  const Cluster& cluster(std::size_t m) const { return clusters_.at(m); }
  const Eigen::MatrixXd& gram() const { return *gram_; }
  const std::shared_ptr<const Eigen::MatrixXd>& gram_ptr() const { return gram_; }
  std::size_t owner(std::size_t i) const { return owner_.at(i); }
  bool assigned(std::size_t i) const { return owner_.at(i) != kUnassigned; }

  // Number of incremental updates that fell back to a from-scratch rebuild.
  std::size_t degeneracy_count() const { return degeneracies_; }

  double total_log_det() const {
    double s = 0.0;
    for (const auto& c : clusters_) s += c.cache.log_det;
    return s;
  }

  Partition partition() const {
    std::vector<std::size_t> raw(owner_.size());
    for (std::size_t i = 0; i < owner_.size(); ++i) {
      if (owner_[i] == kUnassigned) throw InputError("partition(): point " + std::to_string(i) +
                                                     " is unassigned");
      raw[i] = owner_[i];
    }
    return Partition::canonicalize(raw);
  }

  // Schur complement w of point x against cluster m (x must not be in m).
  double schur(std::size_t x, std::size_t m) const {
    const Cluster& c = clusters_.at(m);
    const double self = (*gram_)(idx(x), idx(x));
    if (c.members.empty()) return self;
    scratch_k_.resize(static_cast<Eigen::Index>(c.members.size()));
    for (std::size_t i = 0; i < c.members.size(); ++i)
      scratch_k_(static_cast<Eigen::Index>(i)) = (*gram_)(idx(c.members[i]), idx(x));
    scratch_b_.noalias() = c.cache.inverse * scratch_k_;
    return self - scratch_k_.dot(scratch_b_);
  }

  // Schur complement of member x against the other members of its own
  // cluster, read off the cached inverse as 1 / inverse(x, x).
  double schur_within(std::size_t x) const {
    const Cluster& c = clusters_.at(owner_.at(x));
    const auto pos = static_cast<Eigen::Index>(
        std::find(c.members.begin(), c.members.end(), x) - c.members.begin());
    return 1.0 / c.cache.inverse(pos, pos);
  }

  double self_kernel(std::size_t x) const { return (*gram_)(idx(x), idx(x)); }

  // Takes x out of its cluster, downdating that cluster's cache. A cluster
  // left empty is deleted, shifting the indices of later clusters down.
  void remove_point(std::size_t x) {
    const std::size_t m = owner_.at(x);
    if (m == kUnassigned) throw InputError("remove_point: point is unassigned");
    Cluster& c = clusters_[m];
    const auto pos = static_cast<std::size_t>(
        std::find(c.members.begin(), c.members.end(), x) - c.members.begin());
    owner_[x] = kUnassigned;
    if (c.members.size() == 1) {
      clusters_.erase(clusters_.begin() + static_cast<std::ptrdiff_t>(m));
      for (auto& o : owner_)
        if (o != kUnassigned && o > m) --o;
      return;
    }
    c.members.erase(c.members.begin() + static_cast<std::ptrdiff_t>(pos));
    c.cache = inverse_remove_point(c.cache, pos);
    bump(m);
  }

  // Puts unassigned x into cluster m; m == num_clusters() opens a new one.
  void add_point(std::size_t x, std::size_t m) {
    if (owner_.at(x) != kUnassigned) throw InputError("add_point: point is already assigned");
    if (m > clusters_.size()) throw InputError("add_point: cluster index out of range");
    if (m == clusters_.size()) clusters_.emplace_back();
    Cluster& c = clusters_[m];
    const Eigen::VectorXd k = cross(x, c);
    c.members.push_back(x);
    owner_[x] = m;
    try {
      c.cache = inverse_add_point(c.cache, k, self_kernel(x));
      bump(m);
    } catch (const NumericalDegeneracy&) {
      ++degeneracies_;
      rebuild(m);
    }
  }

  void move_point(std::size_t x, std::size_t m) {
    remove_point(x);
    add_point(x, m);
  }

  // Recomputes cluster m's cache from its Gram block.
  void rebuild(std::size_t m) {
    Cluster& c = clusters_.at(m);
    bool jittered = false;
    c.cache = rebuild_cache(block(c.members), &jittered);
    if (jittered) ++degeneracies_;
    c.updates_since_rebuild = 0;
  }

  void rebuild_all() {
    for (std::size_t m = 0; m < clusters_.size(); ++m) rebuild(m);
  }

  // Largest relative deviation between the cached inverses/log-dets and a
  // fresh Cholesky of each cluster block.
  double max_cache_error() const {
    double err = 0.0;
    for (const auto& c : clusters_) {
      const auto fresh = cholesky_logdet(block(c.members));
      const double scale = std::max(1.0, fresh.inverse.cwiseAbs().maxCoeff());
      err = std::max(err, (fresh.inverse - c.cache.inverse).cwiseAbs().maxCoeff() / scale);
      err = std::max(err, std::abs(fresh.log_det - c.cache.log_det) /
                              std::max(1.0, std::abs(fresh.log_det)));
    }
    return err;
  }

  Eigen::MatrixXd block(std::span<const std::size_t> members) const {
    const auto n = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd b(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        b(i, j) = (*gram_)(idx(members[static_cast<std::size_t>(i)]),
                           idx(members[static_cast<std::size_t>(j)]));
    return b;
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  Eigen::VectorXd cross(std::size_t x, const Cluster& c) const {
    Eigen::VectorXd k(static_cast<Eigen::Index>(c.members.size()));
    for (std::size_t i = 0; i < c.members.size(); ++i)
      k(static_cast<Eigen::Index>(i)) = (*gram_)(idx(c.members[i]), idx(x));
    return k;
  }

  void bump(std::size_t m) {
    if (++clusters_[m].updates_since_rebuild >= rebuild_interval_ && rebuild_interval_ > 0)
      rebuild(m);
  }

  std::shared_ptr<const Eigen::MatrixXd> gram_;
  std::vector<Cluster> clusters_;
  std::vector<std::size_t> owner_;
  int rebuild_interval_;
  std::size_t degeneracies_ = 0;
  mutable Eigen::VectorXd scratch_k_, scratch_b_;
};

// Unnormalized log-density of the state's partition: -tau * total log det,
// or kLogZero when the constraints are violated.
inline double log_likelihood(const ClusterState& state, const KernelParams& params,
                             const LabelConstraints& constraints) {
  if (!satisfies_constraints(state.partition(), constraints)) return kLogZero;
  return -params.temperature * state.total_log_det();
}

}  // namespace dcp
