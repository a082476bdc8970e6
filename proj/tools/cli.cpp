#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcp/dcp.hpp"

namespace dcp {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kVersion = DCP_VERSION;

struct KernelOptions {
  std::string family = "se";
  std::vector<double> lengthscales{1.0};
  double delta_value = 1.0;
  double temperature = 1.0;

  void add_to(CLI::App& app) {
    app.add_option("--kernel", family, "Kernel family")
        ->check(CLI::IsMember({"se", "delta"}))
        ->capture_default_str();
    app.add_option("--lengthscale", lengthscales,
                   "Squared-exponential lengthscales, one per feature or a single shared value")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--delta-value", delta_value, "Delta kernel value")->capture_default_str();
    app.add_option("--temperature", temperature, "Initial temperature")->capture_default_str();
  }

  KernelParams resolve(std::size_t dim) const {
    KernelParams p;
    p.family = kernel_family_from_string(family);
    p.temperature = temperature;
    if (p.family == KernelFamily::Delta) {
      p.delta_value = delta_value;
    } else if (lengthscales.size() == 1) {
      p.lengthscales.assign(dim, lengthscales.front());
    } else {
      p.lengthscales = lengthscales;
    }
    p.validate(dim);
    return p;
  }
};

json params_json(const KernelParams& p) {
  json j;
  j["family"] = to_string(p.family);
  j["temperature"] = p.temperature;
  if (p.family == KernelFamily::Delta)
    j["delta_value"] = p.delta_value;
  else
    j["lengthscales"] = p.lengthscales;
  return j;
}

json lognormal_json(const LogNormal& l) { return {{"location", l.location}, {"scale", l.scale}}; }

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::vector<std::size_t> identity_map(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::string scenario = "multimodal";
  std::uint64_t seed = 1;
  std::optional<std::size_t> boundary;
  std::string data_path = "data.csv";
  std::string truth_path = "truth.csv";
};

int run_synth(const SynthOptions& o) {
  auto spec = SyntheticSpec::preset(scenario_from_string(o.scenario), o.seed);
  if (o.boundary) {
    if (spec.scenario != Scenario::OverlapPair)
      throw InputError("--boundary only applies to the overlap scenario");
    spec = SyntheticSpec::overlap_pair(o.seed, *o.boundary);
  }
  const auto s = generate_synthetic(spec);
  {
    auto out = open_out(o.data_path);
    write_csv(out, s.data);
  }
  auto out = open_out(o.truth_path);
  write_partition(out, s.truth, s.test_indices);
  std::cout << "wrote " << s.data.size() << " points (" << s.test_indices.size()
            << " test) to " << o.data_path << '\n';
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitOptions {
  std::string input;
  std::string out_dir = "dcp_out";
  std::optional<std::string> truth;
  bool test_only = true;
  KernelOptions kernel;
  SamplerConfig sampler;
  std::string init = "singletons";
  bool fixed_kernel = false;
  bool fixed_temperature = false;
  double prior_ls_location = 0.0, prior_ls_scale = 1.0;
  double prior_delta_location = 0.0, prior_delta_scale = 1.0;
  double prior_tau_location = 0.0, prior_tau_scale = 1.0;
};

int run_fit(FitOptions o) {
  const CsvData csv = load_csv(o.input);
  const DataSet& data = csv.dedup.data;
  const auto& rep = csv.dedup.representative;
  const KernelParams params = o.kernel.resolve(data.dim());

  o.sampler.init_mode = o.init == "random_anchors" ? InitMode::RandomAnchors : InitMode::Singletons;
  o.sampler.learn_kernel = !o.fixed_kernel;
  o.sampler.learn_temperature = !o.fixed_temperature;
  HyperPrior prior;
  prior.lengthscales = {LogNormal{o.prior_ls_location, o.prior_ls_scale}};
  prior.delta_value = LogNormal{o.prior_delta_location, o.prior_delta_scale};
  prior.temperature = LogNormal{o.prior_tau_location, o.prior_tau_scale};

  std::optional<PartitionFile> truth;
  if (o.truth) {
    truth = load_partition(*o.truth);
    if (truth->partition.size() != csv.raw.size())
      throw InputError("truth file has " + std::to_string(truth->partition.size()) +
                       " rows but the data has " + std::to_string(csv.raw.size()));
  }

  const PosteriorTrace trace = run_inference(data, params, prior, o.sampler);

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "trace.csv");
    write_trace(out, trace, rep);
  }

  json summary;
  summary["num_samples"] = trace.samples.size();
  summary["hyper_acceptance_rate"] = trace.acceptance_rate();
  summary["degenerate_schur_complements"] = trace.degeneracy_count;
  if (!trace.samples.empty()) {
    PosteriorTrace expanded;
    expanded.samples.reserve(trace.samples.size());
    std::map<Partition, std::size_t> counts;
    for (const auto& s : trace.samples) {
      TraceSample e = s;
      e.partition = s.partition.expand(rep);
      ++counts[e.partition];
      expanded.samples.push_back(std::move(e));
    }
    std::optional<Partition> truth_p;
    std::optional<std::vector<std::size_t>> test;
    if (truth) {
      truth_p = truth->partition;
      if (o.test_only && truth->test_indices && !truth->test_indices->empty())
        test = truth->test_indices;
    }
    const PosteriorSummary ps = summarize(expanded, truth_p, test);
    json hist = json::object();
    for (const auto& [k, f] : ps.cluster_count_histogram) hist[std::to_string(k)] = f;
    summary["cluster_count_histogram"] = hist;
    json co = json::array();
    for (Eigen::Index i = 0; i < ps.co_occurrence.rows(); ++i) {
      std::vector<double> row(ps.co_occurrence.row(i).begin(), ps.co_occurrence.row(i).end());
      co.push_back(row);
    }
    summary["co_occurrence"] = co;
    if (ps.mean_ari) {
      summary["mean_ari"] = *ps.mean_ari;
      summary["mean_nmi"] = *ps.mean_nmi;
      summary["metric_points"] = test ? "test" : "all";
    }
    summary["nmi_normalizer"] = "arithmetic_mean";
    summary["final_params"] = params_json(trace.samples.back().params);

    auto modal = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
      if (it->second > modal->second) modal = it;
    auto out = open_out(dir / "modal_partition.csv");
    write_partition(out, modal->first);
  }
  write_json(dir / "summary.json", summary);

  json manifest;
  manifest["version"] = kVersion;
  manifest["command"] = "fit";
  manifest["input"] = o.input;
  manifest["truth"] = o.truth ? json(*o.truth) : json(nullptr);
  manifest["metrics_on_test_points_only"] = o.test_only;
  manifest["num_rows"] = csv.raw.size();
  manifest["num_unique_rows"] = data.size();
  manifest["feature_names"] = csv.feature_names;
  manifest["initial_params"] = params_json(params);
  manifest["prior"] = {{"lengthscale", lognormal_json(prior.lengthscales.front())},
                       {"delta_value", lognormal_json(prior.delta_value)},
                       {"temperature", lognormal_json(prior.temperature)}};
  const SamplerConfig& c = o.sampler;
  manifest["sampler"] = {{"n_sweeps", c.n_sweeps},
                         {"burn_in", c.burn_in},
                         {"thin", c.thin},
                         {"seed", c.seed},
                         {"aux_sweeps", c.aux_sweeps},
                         {"exact_aux_threshold", c.exact_aux_threshold},
                         {"proposal_step", c.proposal_step},
                         {"rebuild_interval", c.rebuild_interval},
                         {"init_mode", to_string(c.init_mode)},
                         {"learn_kernel", c.learn_kernel},
                         {"learn_temperature", c.learn_temperature}};
  manifest["numerics"] = {{"schur_floor", kSchurFloor}, {"rebuild_jitter", kRebuildJitter}};
  manifest["random_streams"] = {"init", "chain", "proposal"};
  write_json(dir / "manifest.json", manifest);

  std::cout << "recorded " << trace.samples.size() << " samples in " << dir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string reference;
  std::string candidate;
  bool test_only = false;
};

int run_eval(const EvalOptions& o) {
  const auto a = load_partition(o.reference);
  const auto b = load_partition(o.candidate);
  if (a.partition.size() != b.partition.size())
    throw InputError("partition files have different lengths");
  std::vector<std::size_t> idx = identity_map(a.partition.size());
  if (o.test_only) {
    if (!a.test_indices) throw InputError("--test-only needs a 'test' column in the reference");
    idx = *a.test_indices;
  }
  const Partition pa = a.partition.restrict_to(idx);
  const Partition pb = b.partition.restrict_to(idx);
  json j{{"ari", adjusted_rand_index(pa, pb)},
         {"nmi", normalized_mutual_information(pa, pb)},
         {"nmi_normalizer", "arithmetic_mean"},
         {"num_points", idx.size()}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- enumerate

struct EnumerateOptions {
  std::string input;
  std::optional<std::string> out;
  KernelOptions kernel;
};

int run_enumerate(const EnumerateOptions& o) {
  const CsvData csv = load_csv(o.input);
  const DataSet& data = csv.dedup.data;
  const KernelParams params = o.kernel.resolve(data.dim());
  const LabelConstraints c = constraints_from_labels(data.labels);
  const auto post = exact_posterior(data.points, params, c);
  json parts = json::array();
  for (const auto& [p, prob] : post)
    parts.push_back({{"assignment", p.expand(csv.dedup.representative).assignment()},
                     {"probability", prob}});
  json j{{"num_points", csv.raw.size()},
         {"num_partitions", post.size()},
         {"params", params_json(params)},
         {"partitions", parts}};
  if (o.out)
    write_json(*o.out, j);
  else
    std::cout << j.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------- baseline-kmeans

struct KMeansOptions {
  std::string input;
  std::size_t k = 2;
  std::uint64_t seed = 1;
  std::optional<std::string> truth;
  bool test_only = true;
  std::optional<std::string> out;
};

int run_kmeans(const KMeansOptions& o) {
  const CsvData csv = load_csv(o.input);
  const Partition p =
      kmeans(csv.dedup.data.points, o.k, o.seed).expand(csv.dedup.representative);
  if (o.out) {
    auto out = open_out(*o.out);
    write_partition(out, p);
  }
  json j{{"k", o.k}, {"seed", o.seed}, {"num_clusters", p.num_clusters()}};
  if (o.truth) {
    const auto t = load_partition(*o.truth);
    if (t.partition.size() != p.size()) throw InputError("truth file length mismatch");
    std::vector<std::size_t> idx = identity_map(p.size());
    if (o.test_only && t.test_indices && !t.test_indices->empty()) idx = *t.test_indices;
    j["ari"] = adjusted_rand_index(t.partition.restrict_to(idx), p.restrict_to(idx));
    j["nmi"] = normalized_mutual_information(t.partition.restrict_to(idx), p.restrict_to(idx));
    j["nmi_normalizer"] = "arithmetic_mean";
    j["num_points"] = idx.size();
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Clustering with determinantal partition priors"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic data set and its truth");
  synth_cmd->add_option("--scenario", synth.scenario)
      ->check(CLI::IsMember({"overlap", "multimodal", "blobs"}))
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--boundary", synth.boundary, "Boundary test points (overlap only)");
  synth_cmd->add_option("--out", synth.data_path, "Data CSV")->capture_default_str();
  synth_cmd->add_option("--truth", synth.truth_path, "Truth partition CSV")->capture_default_str();

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Sample the partition and hyperparameter posterior");
  fit_cmd->add_option("--input", fit.input, "Data CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--out", fit.out_dir, "Output directory")->capture_default_str();
  fit_cmd->add_option("--truth", fit.truth, "Truth partition CSV for scoring")
      ->check(CLI::ExistingFile);
  fit_cmd->add_flag("!--all-points", fit.test_only,
                    "Score every point rather than only rows flagged as test");
  fit.kernel.add_to(*fit_cmd);
  fit_cmd->add_option("--sweeps", fit.sampler.n_sweeps)->capture_default_str();
  fit_cmd->add_option("--burn-in", fit.sampler.burn_in)->capture_default_str();
  fit_cmd->add_option("--thin", fit.sampler.thin)->capture_default_str();
  fit_cmd->add_option("--seed", fit.sampler.seed)->capture_default_str();
  fit_cmd->add_option("--aux-sweeps", fit.sampler.aux_sweeps)->capture_default_str();
  fit_cmd->add_option("--exact-aux-threshold", fit.sampler.exact_aux_threshold)
      ->capture_default_str();
  fit_cmd->add_option("--proposal-step", fit.sampler.proposal_step)->capture_default_str();
  fit_cmd->add_option("--rebuild-interval", fit.sampler.rebuild_interval)->capture_default_str();
  fit_cmd->add_option("--init", fit.init)
      ->check(CLI::IsMember({"singletons", "random_anchors"}))
      ->capture_default_str();
  fit_cmd->add_flag("--fixed-kernel", fit.fixed_kernel, "Keep kernel hyperparameters fixed");
  fit_cmd->add_flag("--fixed-temperature", fit.fixed_temperature, "Keep the temperature fixed");
  fit_cmd->add_option("--prior-lengthscale-location", fit.prior_ls_location)->capture_default_str();
  fit_cmd->add_option("--prior-lengthscale-scale", fit.prior_ls_scale)->capture_default_str();
  fit_cmd->add_option("--prior-delta-location", fit.prior_delta_location)->capture_default_str();
  fit_cmd->add_option("--prior-delta-scale", fit.prior_delta_scale)->capture_default_str();
  fit_cmd->add_option("--prior-temperature-location", fit.prior_tau_location)
      ->capture_default_str();
  fit_cmd->add_option("--prior-temperature-scale", fit.prior_tau_scale)->capture_default_str();

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compare two partition files");
  eval_cmd->add_option("reference", eval.reference)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("candidate", eval.candidate)->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--test-only", eval.test_only, "Restrict to the reference's test rows");

  EnumerateOptions en;
  auto* en_cmd = app.add_subcommand("enumerate", "Exact partition posterior for small data sets");
  en_cmd->add_option("--input", en.input)->required()->check(CLI::ExistingFile);
  en_cmd->add_option("--out", en.out, "JSON output path (default: stdout)");
  en.kernel.add_to(*en_cmd);

  KMeansOptions km;
  auto* km_cmd = app.add_subcommand("baseline-kmeans", "Fit and score k-means");
  km_cmd->add_option("--input", km.input)->required()->check(CLI::ExistingFile);
  km_cmd->add_option("--k", km.k)->capture_default_str();
  km_cmd->add_option("--seed", km.seed)->capture_default_str();
  km_cmd->add_option("--truth", km.truth)->check(CLI::ExistingFile);
  km_cmd->add_flag("!--all-points", km.test_only, "Score every point");
  km_cmd->add_option("--out", km.out, "Partition CSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*fit_cmd) return run_fit(fit);
    if (*eval_cmd) return run_eval(eval);
    if (*en_cmd) return run_enumerate(en);
    if (*km_cmd) return run_kmeans(km);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace dcp
