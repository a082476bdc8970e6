#pragma once

// Posterior inference over partitions and kernel hyperparameters.
//
// Partitions are updated by single-point Gibbs moves: a point is taken out of
// its cluster and reassigned with weight w_m^-tau, where w_m is its Schur
// complement against cluster m (the factor by which det K_m grows when the
// point joins), or k(x, x)^-tau for a fresh cluster. Hyperparameters are
// updated with the single-variable exchange algorithm, which draws an
// auxiliary partition at the proposed parameters so that the intractable
// normalizer of the partition density cancels.

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcp/error.hpp"
#include "dcp/kernel.hpp"
#include "dcp/linalg.hpp"
#include "dcp/partition.hpp"
#include "dcp/random.hpp"

namespace dcp {

enum class InitMode { Singletons, RandomAnchors };

inline const char* to_string(InitMode m) {
  return m == InitMode::Singletons ? "singletons" : "random_anchors";
}

struct SamplerConfig {
  std::size_t n_sweeps = 1000;
  std::size_t burn_in = 200;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::size_t aux_sweeps = 20;
  std::size_t exact_aux_threshold = 8;
  double proposal_step = 0.2;
  int rebuild_interval = 64;
  InitMode init_mode = InitMode::Singletons;
  bool learn_kernel = true;
  bool learn_temperature = true;

  void validate() const {
    if (thin < 1) throw InputError("thin must be at least 1");
    if (!(proposal_step > 0.0)) throw InputError("proposal_step must be positive");
    if (rebuild_interval < 0) throw InputError("rebuild_interval must be non-negative");
    if (exact_aux_threshold > kMaxEnumerable)
      throw InputError("exact_aux_threshold may not exceed " + std::to_string(kMaxEnumerable));
  }
};

struct LogNormal {
  double location = 0.0;
  double scale = 1.0;

  double log_density(double x) const {
    if (!(x > 0.0) || !std::isfinite(x)) return kLogZero;
    const double z = (std::log(x) - location) / scale;
    return -std::log(x) - std::log(scale) - 0.5 * std::log(2.0 * M_PI) - 0.5 * z * z;
  }
};

// Independent log-normal priors on each kernel hyperparameter and on the
// temperature. A single lengthscale entry is shared across dimensions.
struct HyperPrior {
  std::vector<LogNormal> lengthscales{LogNormal{}};
  LogNormal delta_value{};
  LogNormal temperature{};

  void validate() const {
    if (lengthscales.empty()) throw InputError("prior needs at least one lengthscale entry");
    for (const auto& p : lengthscales)
      if (!(p.scale > 0.0)) throw InputError("prior scales must be positive");
    if (!(delta_value.scale > 0.0) || !(temperature.scale > 0.0))
      throw InputError("prior scales must be positive");
  }

  const LogNormal& lengthscale(std::size_t d) const {
    return lengthscales.size() == 1 ? lengthscales.front() : lengthscales.at(d);
  }

  double log_density(const KernelParams& p) const {
    double lp = temperature.log_density(p.temperature);
    if (p.family == KernelFamily::Delta) return lp + delta_value.log_density(p.delta_value);
    for (std::size_t d = 0; d < p.lengthscales.size(); ++d)
      lp += lengthscale(d).log_density(p.lengthscales[d]);
    return lp;
  }
};

// Gaussian random walk on log-parameters. In the original parameterization
// its density ratio is the product of to/from over the moved coordinates.
struct LogRandomWalk {
  double step = 0.2;
  bool kernel = true;
  bool temperature = true;

  KernelParams propose(const KernelParams& from, Rng& rng) const {
    KernelParams to = from;
    if (kernel) {
      if (to.family == KernelFamily::Delta)
        to.delta_value *= std::exp(step * standard_normal(rng));
      else
        for (double& l : to.lengthscales) l *= std::exp(step * standard_normal(rng));
    }
    if (temperature) to.temperature *= std::exp(step * standard_normal(rng));
    return to;
  }

  // log q(to -> from) - log q(from -> to).
  double log_q_ratio(const KernelParams& from, const KernelParams& to) const {
    double r = 0.0;
    if (kernel) {
      if (from.family == KernelFamily::Delta)
        r += std::log(to.delta_value / from.delta_value);
      else
        for (std::size_t d = 0; d < from.lengthscales.size(); ++d)
          r += std::log(to.lengthscales[d] / from.lengthscales[d]);
    }
    if (temperature) r += std::log(to.temperature / from.temperature);
    return r;
  }
};

struct TraceSample {
  std::size_t sweep = 0;
  Partition partition;
  KernelParams params;
  double log_likelihood = 0.0;
};

struct PosteriorTrace {
  std::vector<TraceSample> samples;
  std::size_t hyper_accept_count = 0;
  std::size_t hyper_propose_count = 0;
  std::size_t degeneracy_count = 0;

  double acceptance_rate() const {
    return hyper_propose_count == 0
               ? 0.0
               : static_cast<double>(hyper_accept_count) /
                     static_cast<double>(hyper_propose_count);
  }
};

// Log-weights for placing unassigned point x into each existing cluster, then
// into a new cluster (last entry). Clamped Schur complements are counted in
// `degenerate` when given.
inline std::vector<double> gibbs_conditional(const ClusterState& state, std::size_t x,
                                             const KernelParams& params,
                                             std::size_t* degenerate = nullptr) {
  if (state.assigned(x)) throw InputError("gibbs_conditional: point must be removed first");
  const double tau = params.temperature;
  std::vector<double> w(state.num_clusters() + 1);
  for (std::size_t m = 0; m < state.num_clusters(); ++m) {
    double s = state.schur(x, m);
    if (!(s > kSchurFloor)) {
      s = kSchurFloor;
      if (degenerate) ++*degenerate;
    }
    w[m] = -tau * std::log(s);
  }
  w.back() = -tau * std::log(state.self_kernel(x));
  return w;
}

inline std::vector<std::size_t> unlabeled_indices(std::size_t n, const LabelConstraints& c) {
  std::vector<bool> labeled(n, false);
  for (std::size_t i : c.labeled_indices)
    if (i < n) labeled[i] = true;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (!labeled[i]) out.push_back(i);
  return out;
}

// One Gibbs pass over the unlabelled points in a fresh random order. Returns
// the number of clamped Schur complements encountered.
//
// The conditional is evaluated without downdating x's current cluster (its
// Schur complement there is 1 / inverse(x, x)), and caches are only touched
// when x actually moves. Weights are laid out exactly as gibbs_conditional
// would produce them after removing x, so both paths draw identically.
inline std::size_t gibbs_sweep(ClusterState& state, const KernelParams& params,
                               const LabelConstraints& constraints, Rng& rng) {
  std::vector<std::size_t> order = unlabeled_indices(state.size(), constraints);
  shuffle(order, rng);
  const double tau = params.temperature;
  std::size_t degenerate = 0;
  std::vector<double> w;
  for (std::size_t x : order) {
    const std::size_t home = state.owner(x);
    const bool alone = state.cluster(home).members.size() == 1;
    w.clear();
    for (std::size_t m = 0; m < state.num_clusters(); ++m) {
      if (m == home && alone) continue;
      double s = m == home ? state.schur_within(x) : state.schur(x, m);
      if (!(s > kSchurFloor)) {
        s = kSchurFloor;
        ++degenerate;
      }
      w.push_back(-tau * std::log(s));
    }
    w.push_back(-tau * std::log(state.self_kernel(x)));
    const std::size_t choice = sample_log_categorical(w, rng);
    const bool fresh = choice + 1 == w.size();
    if (alone) {
      if (fresh) continue;
      const std::size_t target = choice < home ? choice : choice + 1;
      state.move_point(x, target > home ? target - 1 : target);
    } else {
      if (choice == home) continue;
      state.move_point(x, fresh ? state.num_clusters() : choice);
    }
  }
  assert(satisfies_constraints(state.partition(), constraints));
  return degenerate;
}

// Starting partition: labelled points grouped into one anchor cluster per
// label; unlabelled points as singletons, or (RandomAnchors) each placed in a
// uniformly chosen anchor cluster when any exist.
inline Partition initial_partition(std::size_t n, const LabelConstraints& constraints,
                                   InitMode mode, Rng& rng) {
  std::vector<int> raw(n, -1);
  const auto anchors = anchor_groups(constraints);
  for (std::size_t g = 0; g < anchors.size(); ++g)
    for (std::size_t i : anchors[g]) raw[i] = static_cast<int>(g);
  int next = static_cast<int>(anchors.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (raw[i] >= 0) continue;
    if (mode == InitMode::RandomAnchors && !anchors.empty())
      raw[i] = static_cast<int>(uniform_index(rng, anchors.size()));
    else
      raw[i] = next++;
  }
  return Partition::canonicalize(raw);
}

// Normalized partition posterior by enumeration, restricted to partitions
// satisfying the constraints.
inline std::map<Partition, double> exact_posterior(const Eigen::MatrixXd& gram, double temperature,
                                                   const LabelConstraints& constraints = {}) {
  const auto n = static_cast<std::size_t>(gram.rows());
  const std::vector<Partition> all = enumerate_partitions(n);
  std::vector<double> logw;
  std::vector<const Partition*> kept;
  for (const auto& p : all) {
    const double lw = partition_log_density(gram, p, temperature, &constraints);
    if (is_log_zero(lw)) continue;
    logw.push_back(lw);
    kept.push_back(&p);
  }
  if (kept.empty()) throw InputError("exact_posterior: constraints admit no partition");
  const std::vector<double> prob = normalize_log_weights(logw);
  std::map<Partition, double> out;
  for (std::size_t i = 0; i < kept.size(); ++i) out.emplace(*kept[i], prob[i]);
  return out;
}

inline std::map<Partition, double> exact_posterior(const Eigen::MatrixXd& points,
                                                   const KernelParams& params,
                                                   const LabelConstraints& constraints) {
  if (static_cast<std::size_t>(points.rows()) > kMaxEnumerable)
    throw InputError("exact_posterior: at most " + std::to_string(kMaxEnumerable) + " points");
  params.validate(static_cast<std::size_t>(points.cols()));
  return exact_posterior(full_gram(points, params), params.temperature, constraints);
}

inline Partition sample_from(const std::map<Partition, double>& dist, Rng& rng) {
  double u = uniform01(rng);
  const Partition* last = nullptr;
  for (const auto& [p, prob] : dist) {
    if (u < prob) return p;
    u -= prob;
    last = &p;
  }
  return *last;
}

// Auxiliary partition drawn from the unconstrained partition density under the
// given Gram matrix: exact by enumeration for small N, otherwise the end state
// of aux_sweeps Gibbs sweeps started from singletons.
inline Partition draw_auxiliary(const std::shared_ptr<const Eigen::MatrixXd>& gram,
                                double temperature, const SamplerConfig& config, Rng& rng) {
  const auto n = static_cast<std::size_t>(gram->rows());
  if (n <= config.exact_aux_threshold) return sample_from(exact_posterior(*gram, temperature), rng);
  ClusterState aux(gram, Partition::singletons(n), config.rebuild_interval);
  KernelParams tau_only;
  tau_only.temperature = temperature;
  const LabelConstraints none;
  for (std::size_t s = 0; s < config.aux_sweeps; ++s) gibbs_sweep(aux, tau_only, none, rng);
  return aux.partition();
}

struct ExchangeResult {
  KernelParams params;
  bool accepted = false;
  double log_acceptance = kLogZero;  // log of the uncapped acceptance ratio
  std::shared_ptr<const Eigen::MatrixXd> gram;  // Gram matrix under `params`
};

// One exchange-algorithm update of (kernel hyperparameters, temperature) given
// the current partition held in `state`.
//
// Prior must provide `double log_density(const KernelParams&) const`.
// Proposal must provide `KernelParams propose(const KernelParams&, Rng&) const`
// and `double log_q_ratio(const KernelParams& from, const KernelParams& to) const`.
template <class Prior, class Proposal>
ExchangeResult exchange_update(const Eigen::MatrixXd& points, const KernelParams& current,
                               const ClusterState& state, const Prior& prior,
                               const Proposal& proposal, const SamplerConfig& config, Rng& rng) {
  ExchangeResult r{current, false, kLogZero, state.gram_ptr()};
  const KernelParams proposed = proposal.propose(current, rng);
  const double log_prior_new = prior.log_density(proposed);
  if (is_log_zero(log_prior_new)) return r;
  const double log_prior_old = prior.log_density(current);

  const auto gram_new = std::make_shared<const Eigen::MatrixXd>(full_gram(points, proposed));
  const Eigen::MatrixXd& gram_old = state.gram();
  const Partition s = state.partition();
  const Partition aux = draw_auxiliary(gram_new, proposed.temperature, config, rng);

  const double log_ratio =
      (partition_log_density(*gram_new, s, proposed.temperature) -
       partition_log_density(gram_old, s, current.temperature)) +
      (partition_log_density(gram_old, aux, current.temperature) -
       partition_log_density(*gram_new, aux, proposed.temperature)) +
      (log_prior_new - log_prior_old) + proposal.log_q_ratio(current, proposed);
  r.log_acceptance = log_ratio;
  if (log_ratio >= 0.0 || std::log(uniform01(rng)) < log_ratio) {
    r.params = proposed;
    r.accepted = true;
    r.gram = gram_new;
  }
  return r;
}

// Alternates one Gibbs sweep with one exchange update per iteration and
// records thinned post-burn-in samples. Deterministic given config.seed.
template <class Prior, class Proposal>
PosteriorTrace run_inference(const DataSet& data, KernelParams params, const Prior& prior,
                             const Proposal& proposal, const SamplerConfig& config) {
  config.validate();
  params.validate(data.dim());
  if (data.size() == 0) throw InputError("run_inference: empty data set");
  if (has_duplicate_rows(data.points))
    throw InputError("run_inference: data contains identical rows; deduplicate first");

  const LabelConstraints constraints =
      data.labels.empty() ? LabelConstraints{} : constraints_from_labels(data.labels);
  Rng init_rng = make_stream(config.seed, "init");
  Rng chain_rng = make_stream(config.seed, "chain");
  Rng hyper_rng = make_stream(config.seed, "proposal");

  auto gram = std::make_shared<const Eigen::MatrixXd>(full_gram(data.points, params));
  ClusterState state(
      gram, initial_partition(data.size(), constraints, config.init_mode, init_rng),
      config.rebuild_interval);

  const bool learn = config.learn_kernel || config.learn_temperature;
  PosteriorTrace trace;
  std::size_t degenerate = 0;
  for (std::size_t sweep = 0; sweep < config.n_sweeps; ++sweep) {
    degenerate += gibbs_sweep(state, params, constraints, chain_rng);
    if (learn) {
      ExchangeResult ex =
          exchange_update(data.points, params, state, prior, proposal, config, hyper_rng);
      ++trace.hyper_propose_count;
      if (ex.accepted) {
        ++trace.hyper_accept_count;
        params = ex.params;
        degenerate += state.degeneracy_count();
        state = ClusterState(ex.gram, state.partition(), config.rebuild_interval);
      }
    }
    if (sweep >= config.burn_in && (sweep - config.burn_in + 1) % config.thin == 0)
      trace.samples.push_back(
          {sweep, state.partition(), params, log_likelihood(state, params, constraints)});
  }
  trace.degeneracy_count = degenerate + state.degeneracy_count();
  return trace;
}

inline PosteriorTrace run_inference(const DataSet& data, const KernelParams& params,
                                    const HyperPrior& prior, const SamplerConfig& config) {
  prior.validate();
  const LogRandomWalk proposal{config.proposal_step, config.learn_kernel,
                               config.learn_temperature};
  return run_inference(data, params, prior, proposal, config);
}

}  // namespace dcp
