#pragma once

// Kernel functions and Gram matrices over subsets of a point set.
//
// The squared-exponential kernel carries no amplitude: scaling a kernel by a
// constant multiplies every determinant of an n x n block by alpha^n, which
// only shifts the partition log-density by a partition-independent constant.
// Lengthscales enter exactly as k(x, y) = exp(-1/2 sum_d (x_d - y_d)^2 / l_d),
// i.e. l_d plays the role of a squared lengthscale.

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcp/error.hpp"

namespace dcp {

enum class KernelFamily { SquaredExponential, Delta };

inline const char* to_string(KernelFamily f) {
  return f == KernelFamily::SquaredExponential ? "se" : "delta";
}

inline KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "se" || s == "squared_exponential") return KernelFamily::SquaredExponential;
  if (s == "delta") return KernelFamily::Delta;
  throw InputError("unknown kernel family '" + s + "'");
}

struct KernelParams {
  KernelFamily family = KernelFamily::SquaredExponential;
  std::vector<double> lengthscales;  // one per dimension, SE only
  double delta_value = 1.0;          // Delta only
  double temperature = 1.0;

  static KernelParams squared_exponential(std::vector<double> lengthscales,
                                          double temperature = 1.0) {
    KernelParams p;
    p.family = KernelFamily::SquaredExponential;
    p.lengthscales = std::move(lengthscales);
    p.temperature = temperature;
    return p;
  }

  static KernelParams delta(double value, double temperature = 1.0) {
    KernelParams p;
    p.family = KernelFamily::Delta;
    p.delta_value = value;
    p.temperature = temperature;
    return p;
  }

  // Throws InputError unless every invariant holds for data of dimension dim.
  void validate(std::size_t dim) const {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
      throw InputError("temperature must be strictly positive");
    if (family == KernelFamily::Delta) {
      if (!(delta_value > 0.0) || !std::isfinite(delta_value))
        throw InputError("delta kernel value must be strictly positive");
      return;
    }
    if (lengthscales.size() != dim)
      throw InputError("expected " + std::to_string(dim) + " lengthscales, got " +
                       std::to_string(lengthscales.size()));
    for (double l : lengthscales)
      if (!(l > 0.0) || !std::isfinite(l))
        throw InputError("lengthscales must be strictly positive");
  }

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

// N points in D dimensions, row per point, plus optional per-point labels.
struct DataSet {
  Eigen::MatrixXd points;
  std::vector<std::optional<std::string>> labels;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }

  bool has_labels() const {
    for (const auto& l : labels)
      if (l) return true;
    return false;
  }
};

template <class X, class Y>
double kernel_eval(const Eigen::MatrixBase<X>& x, const Eigen::MatrixBase<Y>& y,
                   const KernelParams& params) {
  if (x.size() != y.size()) throw InputError("kernel_eval: dimension mismatch");
  if (params.family == KernelFamily::Delta) {
    for (Eigen::Index d = 0; d < x.size(); ++d)
      if (x(d) != y(d)) return 0.0;
    return params.delta_value;
  }
  if (static_cast<std::size_t>(x.size()) != params.lengthscales.size())
    throw InputError("kernel_eval: point dimension does not match lengthscales");
  double q = 0.0;
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    const double diff = x(d) - y(d);
    q += diff * diff / params.lengthscales[static_cast<std::size_t>(d)];
  }
  return std::exp(-0.5 * q);
}

// Gram matrix between the rows of `points` indexed by `a` and by `b`.
inline Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& points,
                                   std::span<const std::size_t> a,
                                   std::span<const std::size_t> b,
                                   const KernelParams& params) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(a.size()),
                    static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          kernel_eval(points.row(static_cast<Eigen::Index>(a[i])),
                      points.row(static_cast<Eigen::Index>(b[j])), params);
  return k;
}

// Symmetric Gram matrix of a subset with itself; each entry evaluated once.
inline Eigen::MatrixXd gram_matrix(const Eigen::MatrixXd& points,
                                   std::span<const std::size_t> a,
                                   const KernelParams& params) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ri = points.row(static_cast<Eigen::Index>(a[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_eval(
          ri, points.row(static_cast<Eigen::Index>(a[static_cast<std::size_t>(j)])), params);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

// Gram matrix over every point.
inline Eigen::MatrixXd full_gram(const Eigen::MatrixXd& points, const KernelParams& params) {
  std::vector<std::size_t> all(static_cast<std::size_t>(points.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return gram_matrix(points, all, params);
}

// Result of merging identical rows. `representative[i]` is the row of
// `data.points` standing in for original row i.
struct DedupResult {
  DataSet data;
  std::vector<std::size_t> representative;
  std::size_t original_size() const { return representative.size(); }
};

// Merges identical rows (exact comparison) into their first occurrence.
// Duplicates carrying different labels cannot share a cluster and are
// rejected; an unlabeled duplicate inherits the label of a labeled twin.
inline DedupResult dedup_rows(const DataSet& in) {
  const std::size_t n = in.size();
  if (!in.labels.empty() && in.labels.size() != n)
    throw InputError("label vector length does not match point count");
  std::map<std::vector<double>, std::size_t> seen;
  DedupResult out;
  out.representative.resize(n);
  std::vector<std::size_t> kept;
  std::vector<std::optional<std::string>> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = in.points.row(static_cast<Eigen::Index>(i));
    std::vector<double> key(static_cast<std::size_t>(row.size()));
    for (Eigen::Index d = 0; d < row.size(); ++d) key[static_cast<std::size_t>(d)] = row(d);
    const std::optional<std::string> label =
        in.labels.empty() ? std::nullopt : in.labels[i];
    auto [it, inserted] = seen.emplace(std::move(key), kept.size());
    if (inserted) {
      kept.push_back(i);
      labels.push_back(label);
    } else if (label) {
      auto& existing = labels[it->second];
      if (existing && *existing != *label)
        throw InputError("rows " + std::to_string(kept[it->second]) + " and " +
                         std::to_string(i) + " are identical but carry different labels");
      existing = label;
    }
    out.representative[i] = it->second;
  }
  out.data.points.resize(static_cast<Eigen::Index>(kept.size()), in.points.cols());
  for (std::size_t r = 0; r < kept.size(); ++r)
    out.data.points.row(static_cast<Eigen::Index>(r)) =
        in.points.row(static_cast<Eigen::Index>(kept[r]));
  out.data.labels = std::move(labels);
  return out;
}

inline bool has_duplicate_rows(const Eigen::MatrixXd& points) {
  std::map<std::vector<double>, int> seen;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(points.cols()));
    for (Eigen::Index d = 0; d < points.cols(); ++d) key[static_cast<std::size_t>(d)] = points(i, d);
    if (!seen.emplace(std::move(key), 0).second) return true;
  }
  return false;
}

}  // namespace dcp
