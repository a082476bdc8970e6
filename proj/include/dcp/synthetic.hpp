#pragma once

// Synthetic semi-supervised clustering problems in two dimensions.
//
// Each problem is a set of Gaussian components, each owned by a ground-truth
// cluster. Test points (the ones whose cluster must be predicted) are left
// unlabeled; every other point carries its cluster's label.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcp/error.hpp"
#include "dcp/kernel.hpp"
#include "dcp/partition.hpp"
#include "dcp/random.hpp"

namespace dcp {

enum class Scenario { OverlapPair, MultiModal, Blobs };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::OverlapPair: return "overlap";
    case Scenario::MultiModal: return "multimodal";
    case Scenario::Blobs: return "blobs";
  }
  return "?";
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "overlap" || s == "overlap_pair") return Scenario::OverlapPair;
  if (s == "multimodal" || s == "multi_modal") return Scenario::MultiModal;
  if (s == "blobs") return Scenario::Blobs;
  throw InputError("unknown scenario '" + s + "'");
}

struct GaussianComponent {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  std::size_t count = 10;
  int cluster = 0;
  std::size_t held_out = 0;  // leading draws of this component kept as test points
  bool hidden = false;       // every draw is a test point
  // Extra test draws kept only if at least as close to another cluster's mean
  // as to their own cluster's mean.
  std::size_t boundary = 0;
};

struct SyntheticSpec {
  Scenario scenario = Scenario::MultiModal;
  std::vector<GaussianComponent> components;
  std::uint64_t seed = 1;

  void validate() const {
    if (components.empty()) throw InputError("synthetic spec has no components");
    for (const auto& c : components) {
      if (c.count < 1) throw InputError("component counts must be at least 1");
      if (c.held_out > c.count) throw InputError("held_out exceeds component count");
      if (c.cluster < 0) throw InputError("cluster ids must be non-negative");
      if ((c.cov - c.cov.transpose()).cwiseAbs().maxCoeff() > 0.0)
        throw InputError("component covariance must be symmetric");
      if (Eigen::LLT<Eigen::Matrix2d>(c.cov).info() != Eigen::Success)
        throw InputError("component covariance must be positive definite");
    }
  }

  // A broad cluster beside a tight one. Boundary points come from the broad
  // cluster's tail on the tight cluster's side of the midpoint between means.
  static SyntheticSpec overlap_pair(std::uint64_t seed = 1, std::size_t boundary = 6) {
    SyntheticSpec s;
    s.scenario = Scenario::OverlapPair;
    s.seed = seed;
    GaussianComponent broad;
    broad.mean = {-1.0, 0.0};
    broad.cov = 1.44 * Eigen::Matrix2d::Identity();
    broad.count = 30;
    broad.cluster = 0;
    broad.held_out = 3;
    broad.boundary = boundary;
    GaussianComponent tight;
    tight.mean = {2.0, 0.0};
    tight.cov = 0.09 * Eigen::Matrix2d::Identity();
    tight.count = 30;
    tight.cluster = 1;
    tight.held_out = 3;
    s.components = {broad, tight};
    return s;
  }

  // Cluster 0 is a two-component mixture and cluster 1 a three-component
  // mixture whose third component is never labelled.
  static SyntheticSpec multi_modal(std::uint64_t seed = 1) {
    SyntheticSpec s;
    s.scenario = Scenario::MultiModal;
    s.seed = seed;
    const Eigen::Matrix2d cov = 0.16 * Eigen::Matrix2d::Identity();
    auto comp = [&](double x, double y, int cluster, std::size_t count, std::size_t held,
                    bool hidden) {
      GaussianComponent c;
      c.mean = {x, y};
      c.cov = cov;
      c.count = count;
      c.cluster = cluster;
      c.held_out = held;
      c.hidden = hidden;
      return c;
    };
    s.components = {comp(0.0, 0.0, 0, 15, 2, false), comp(3.0, 3.0, 0, 15, 2, false),
                    comp(3.0, 0.0, 1, 15, 2, false), comp(0.0, 3.0, 1, 15, 2, false),
                    comp(1.5, 1.5, 1, 10, 0, true)};
    return s;
  }

  // Isotropic, well-separated blobs on a line, one cluster each.
  static SyntheticSpec blobs(std::uint64_t seed = 1, std::size_t k = 3, std::size_t count = 20,
                             double separation = 10.0, double sd = 1.0) {
    SyntheticSpec s;
    s.scenario = Scenario::Blobs;
    s.seed = seed;
    for (std::size_t i = 0; i < k; ++i) {
      GaussianComponent c;
      c.mean = {separation * static_cast<double>(i), 0.0};
      c.cov = sd * sd * Eigen::Matrix2d::Identity();
      c.count = count;
      c.cluster = static_cast<int>(i);
      s.components.push_back(c);
    }
    return s;
  }

  static SyntheticSpec preset(Scenario sc, std::uint64_t seed) {
    switch (sc) {
      case Scenario::OverlapPair: return overlap_pair(seed);
      case Scenario::MultiModal: return multi_modal(seed);
      case Scenario::Blobs: return blobs(seed);
    }
    return blobs(seed);
  }
};

struct SyntheticData {
  DataSet data;
  Partition truth;
  std::vector<std::size_t> test_indices;
};

inline std::string cluster_label(int cluster) { return "c" + std::to_string(cluster); }

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = make_stream(spec.seed, "data");
  std::vector<Eigen::Vector2d> pts;
  std::vector<int> truth;
  std::vector<bool> test;

  auto draw = [&](const GaussianComponent& c) {
    const Eigen::Matrix2d l = Eigen::LLT<Eigen::Matrix2d>(c.cov).matrixL();
    const double z0 = standard_normal(rng);
    const double z1 = standard_normal(rng);
    return Eigen::Vector2d(c.mean + l * Eigen::Vector2d(z0, z1));
  };

  for (const auto& c : spec.components)
    for (std::size_t i = 0; i < c.count; ++i) {
      pts.push_back(draw(c));
      truth.push_back(c.cluster);
      test.push_back(c.hidden || i < c.held_out);
    }

  if (std::any_of(spec.components.begin(), spec.components.end(),
                  [](const GaussianComponent& c) { return c.boundary > 0; })) {
    // Cluster mean = count-weighted mean of its component means.
    std::map<int, Eigen::Vector2d> sum;
    std::map<int, double> weight;
    for (const auto& c : spec.components) {
      sum.try_emplace(c.cluster, Eigen::Vector2d::Zero());
      sum[c.cluster] += static_cast<double>(c.count) * c.mean;
      weight[c.cluster] += static_cast<double>(c.count);
    }
    if (sum.size() < 2) throw InputError("boundary points need at least two clusters");
    for (const auto& c : spec.components) {
      const Eigen::Vector2d own = sum[c.cluster] / weight[c.cluster];
      for (std::size_t b = 0; b < c.boundary; ++b) {
        for (std::size_t attempt = 0;; ++attempt) {
          if (attempt > 1000000) throw InputError("could not draw boundary points");
          const Eigen::Vector2d x = draw(c);
          bool crosses = false;
          for (const auto& [other, s] : sum)
            if (other != c.cluster && (x - s / weight[other]).norm() <= (x - own).norm())
              crosses = true;
          if (!crosses) continue;
          pts.push_back(x);
          truth.push_back(c.cluster);
          test.push_back(true);
          break;
        }
      }
    }
  }

  SyntheticData out;
  const std::size_t n = pts.size();
  out.data.points.resize(static_cast<Eigen::Index>(n), 2);
  out.data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.data.points.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
    if (test[i])
      out.test_indices.push_back(i);
    else
      out.data.labels[i] = cluster_label(truth[i]);
  }
  out.truth = Partition::canonicalize(truth);
  return out;
}

}  // namespace dcp
