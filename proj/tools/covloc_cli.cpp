// covloc command-line front end.
//
// Exit codes: 0 success, 1 usage, 2 input/format, 3 numerical degeneracy.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "covloc/covloc.hpp"

namespace fs = std::filesystem;
using covloc::report::Json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kNumerical = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw covloc::FormatError("cannot open '" + path + "' for reading");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char b[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

// Output directory, inputs and timings of one command; written as manifest.json.
class Run {
 public:
  Run(std::string command, std::string out_dir) : command_(std::move(command)), out_(std::move(out_dir)) {
    start_ = clock::now();
    last_ = start_;
  }

  void input(const std::string& path) {
    inputs_.push_back({{"path", path}, {"sha256", sha256_file(path)}, {"bytes", fs::file_size(path)}});
  }

  void phase(const std::string& name) {
    const auto now = clock::now();
    timings_[name] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

  std::string path(const std::string& name) const { return (fs::path(out_) / name).string(); }

  void prepare() const {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw covloc::FormatError("cannot create output directory '" + out_ + "': " + ec.message());
  }

  void finish(const Json& config, std::uint64_t seed) {
    timings_["total"] = std::chrono::duration<double>(clock::now() - start_).count();
    Json m;
    m["tool"] = "covloc";
    m["version"] = covloc::kVersion;
    m["command"] = command_;
    m["seed"] = seed;
    m["config"] = config;
    m["inputs"] = inputs_;
    m["timings_seconds"] = timings_;
    write_json(path("manifest.json"), m);
  }

  static void write_json(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw covloc::FormatError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
  }

 private:
  using clock = std::chrono::steady_clock;
  std::string command_;
  std::string out_;
  clock::time_point start_, last_;
  Json inputs_ = Json::array();
  Json timings_ = Json::object();
};

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw covloc::FormatError("cannot open '" + path + "' for reading");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw covloc::FormatError(path + ": " + e.what());
  }
}

struct Global {
  std::uint64_t seed = 20200101;
  bool seed_given = false;
  std::string format = "csv";
  std::string out = ".";
  int workers = 1;
  bool workers_given = false;

  covloc::io::MatrixFormat matrix_format() const { return covloc::io::parse_format(format); }
  std::string ext() const { return "." + format; }
};

// "balgovind:L" or a matrix file.
covloc::Matrix load_correlation(const std::string& spec, covloc::Index n, const Global& g, Run& run) {
  const std::string prefix = "balgovind:";
  if (spec.rfind(prefix, 0) == 0) {
    double length = 0.0;
    try {
      std::size_t used = 0;
      length = std::stod(spec.substr(prefix.size()), &used);
      if (used != spec.size() - prefix.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("invalid correlation shorthand '" + spec + "' (expected balgovind:L)");
    }
    return covloc::balgovind_correlation(n, length);
  }
  run.input(spec);
  return covloc::io::load_matrix(spec, g.matrix_format());
}

covloc::CovarianceModel load_covariance(const std::string& var_path, const std::string& corr_spec, const Global& g,
                                        Run& run, const char* name) {
  run.input(var_path);
  const covloc::Vector var = covloc::io::load_vector(var_path);
  const covloc::Matrix corr = load_correlation(corr_spec, var.size(), g, run);
  if (corr.rows() != var.size() || corr.cols() != var.size())
    throw covloc::DomainError(std::string(name) + ": correlation is " + std::to_string(corr.rows()) + "x" +
                              std::to_string(corr.cols()) + " but there are " + std::to_string(var.size()) +
                              " variances");
  return covloc::CovarianceModel(var, corr);
}

covloc::Matrix load_operator(const std::string& path, const Global& g, Run& run) {
  run.input(path);
  return covloc::io::load_matrix(path, g.matrix_format());
}

Json global_json(const Global& g) {
  return Json{{"format", g.format}, {"out", g.out}, {"workers", g.workers}};
}

// gen-h ----------------------------------------------------------------------

struct GenOptions {
  std::string config;
};

int cmd_gen_h(const GenOptions& o, const Global& g) {
  Run run("gen-h", g.out);
  covloc::twin::ExperimentConfig cfg;
  if (!o.config.empty()) {
    run.input(o.config);
    cfg = covloc::report::config_from_json(load_json(o.config));
  }
  if (g.seed_given) cfg.seed = g.seed;
  run.prepare();
  const auto jac = covloc::twin::generate_jacobian(cfg, covloc::derive_seed(cfg.seed, {0}));
  run.phase("generate");
  covloc::io::save_matrix(run.path("H" + g.ext()), jac.op, g.matrix_format());
  Run::write_json(run.path("planted.json"),
                  Json{{"state_labels", jac.planted_states.labels()},
                       {"observation_labels", jac.planted_observations},
                       {"state_perm", jac.state_perm},
                       {"observation_perm", jac.observation_perm},
                       {"attempts", jac.attempts}});
  run.phase("write");
  Json snap = covloc::report::config_json(cfg);
  snap["cli"] = global_json(g);
  run.finish(snap, cfg.seed);
  return kOk;
}

// detect ---------------------------------------------------------------------

struct DetectOptions {
  std::string h_path;
  std::string clusters = "auto";
  int p_max = 6;
  int seeds_per_p = 10;
  double tau = covloc::SelectionOptions{}.elbow_tau;
  bool unweighted = false;
  int max_iter = 100;
  double zero_tol = 0.0;
};

int parse_cluster_count(const std::string& s) {
  if (s == "auto") return 0;
  int p = 0;
  try {
    std::size_t used = 0;
    p = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw UsageError("cluster count must be 'auto' or a positive integer, got '" + s + "'");
  }
  if (p < 1) throw UsageError("cluster count must be at least 1, got " + s);
  return p;
}

int cmd_detect(const DetectOptions& o, const Global& g) {
  const int p = parse_cluster_count(o.clusters);
  Run run("detect", g.out);
  const covloc::Matrix h = load_operator(o.h_path, g, run);
  run.prepare();
  run.phase("read");
  const covloc::StateNetwork net = covloc::build_adjacency(h, o.zero_tol);
  if (p > net.order()) throw UsageError("cluster count exceeds the number of states");
  if (p == 0 && (o.p_max < 2 || o.p_max >= net.order()))
    throw UsageError("--p-max must satisfy 2 <= p_max < number of states");
  const covloc::FluidOptions fluid{o.max_iter, !o.unweighted};
  std::vector<covloc::PerformancePoint> curve;
  covloc::ClusterPartition part;
  bool elbow = false;
  if (p == 0) {
    const auto sel = covloc::select_cluster_count(net, o.p_max, {o.seeds_per_p, o.tau, g.seed, fluid});
    curve = sel.curve;
    part = sel.partition();
    elbow = sel.elbow_found;
  } else {
    covloc::PerformancePoint pt{p, -1.0, 0.0};
    for (int s = 0; s < o.seeds_per_p; ++s) {
      auto candidate = covloc::fluid_communities(
          net, p, covloc::derive_seed(g.seed, {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(s)}), fluid);
      const double perf = covloc::partition_performance(net, candidate).performance;
      pt.mean += perf / o.seeds_per_p;
      if (perf > pt.best) {
        pt.best = perf;
        part = std::move(candidate);
      }
    }
    curve.push_back(pt);
  }
  run.phase("detect");
  const auto quality = covloc::partition_performance(net, part);
  Json pj = covloc::report::partition_json(part, quality.performance);
  Run::write_json(run.path("partition.json"), pj);
  {
    std::ofstream out(run.path("performance.csv"));
    covloc::report::write_performance_csv(out, curve);
  }
  covloc::io::save_edge_list(run.path("edges.txt"), net);
  const auto assignment = covloc::classify_observations(h, part, o.zero_tol);
  Run::write_json(run.path("assignment.json"), covloc::report::assignment_json(assignment, part));
  run.phase("write");
  std::cout << "p = " << part.cluster_count() << (p == 0 ? (elbow ? " (elbow)" : " (argmax fallback)") : "")
            << ", performance = " << quality.performance << "\n";
  Json snap{{"h", o.h_path},         {"clusters", o.clusters},      {"p_max", o.p_max},
            {"seeds_per_p", o.seeds_per_p}, {"elbow_tau", o.tau},   {"weighted", !o.unweighted},
            {"fluid_max_iter", o.max_iter}, {"zero_tol", o.zero_tol}, {"cli", global_json(g)}};
  run.finish(snap, g.seed);
  return kOk;
}

// tune -----------------------------------------------------------------------

struct TuneOptions {
  std::vector<std::string> xb, y;
  std::string b_var, b_corr, r_var, r_corr, h_path;
  std::string strategy = "global";
  int q_max = 10;
  double tol = 1e-3;
  std::string partition = "auto";
  std::string reference = "ensemble_mean";
  int p_max = 6;
  int seeds_per_p = 10;
  double tau = covloc::SelectionOptions{}.elbow_tau;
  double zero_tol = 0.0;
};

covloc::InnovationEnsemble load_ensemble(const std::vector<std::string>& xb, const std::vector<std::string>& y,
                                         Run& run) {
  if (xb.size() != y.size())
    throw UsageError("--xb and --y need the same number of files (" + std::to_string(xb.size()) + " vs " +
                     std::to_string(y.size()) + ")");
  std::vector<covloc::InnovationPair> pairs;
  for (std::size_t k = 0; k < xb.size(); ++k) {
    run.input(xb[k]);
    run.input(y[k]);
    pairs.push_back({covloc::io::load_vector(xb[k]), covloc::io::load_vector(y[k])});
  }
  return covloc::InnovationEnsemble(std::move(pairs));
}

int cmd_tune(const TuneOptions& o, const Global& g) {
  if (o.strategy != "global" && o.strategy != "reduction" && o.strategy != "adjustment")
    throw UsageError("--strategy must be global, reduction or adjustment");
  if (o.reference != "ensemble_mean" && o.reference != "pair_background")
    throw UsageError("--adjust-reference must be ensemble_mean or pair_background");
  Run run("tune", g.out);
  const covloc::InnovationEnsemble ens = load_ensemble(o.xb, o.y, run);
  const covloc::CovarianceModel b = load_covariance(o.b_var, o.b_corr, g, run, "B");
  const covloc::CovarianceModel r = load_covariance(o.r_var, o.r_corr, g, run, "R");
  const covloc::Matrix h = load_operator(o.h_path, g, run);
  if (h.cols() != b.size() || h.rows() != r.size() || ens.state_size() != h.cols() ||
      ens.observation_size() != h.rows()) {
    std::ostringstream msg;
    msg << "dimension mismatch: H is " << h.rows() << "x" << h.cols() << ", B has " << b.size() << " states, R has "
        << r.size() << " observations, ensemble pairs are (" << ens.state_size() << ", " << ens.observation_size()
        << ")";
    throw covloc::DomainError(msg.str());
  }
  run.prepare();
  run.phase("read");

  const covloc::TuningOptions opts{o.q_max, o.tol};
  std::optional<covloc::ClusterPartition> part;
  Json partition_note = nullptr;
  if (o.strategy != "global") {
    if (o.partition == "auto") {
      const auto net = covloc::build_adjacency(h, o.zero_tol);
      const auto sel = covloc::select_cluster_count(net, o.p_max, {o.seeds_per_p, o.tau, g.seed, {}});
      part = sel.partition();
      Run::write_json(run.path("partition.json"),
                      covloc::report::partition_json(*part, covloc::partition_performance(net, *part).performance));
      partition_note = "auto";
    } else {
      run.input(o.partition);
      part = covloc::report::partition_from_json(load_json(o.partition));
      if (part->size() != h.cols())
        throw covloc::DomainError("partition has " + std::to_string(part->size()) + " labels but H has " +
                                  std::to_string(h.cols()) + " columns");
      partition_note = o.partition;
    }
  }
  run.phase("partition");

  auto write_outputs = [&](const covloc::TuningResult* res, const covloc::TuningTrace& trace) {
    {
      std::ofstream out(run.path("trace.jsonl"));
      covloc::report::write_trace_jsonl(out, trace);
    }
    Json summary = covloc::report::trace_summary_json(trace);
    summary["strategy"] = o.strategy;
    summary["completed"] = res != nullptr;
    Run::write_json(run.path("summary.json"), summary);
    if (!res) return;
    covloc::io::save_vector(run.path("B_variances.txt"), res->background.variances());
    covloc::io::save_matrix(run.path("B_correlation" + g.ext()), res->background.correlation(), g.matrix_format());
    covloc::io::save_vector(run.path("R_variances.txt"), res->observation.variances());
    covloc::io::save_matrix(run.path("R_correlation" + g.ext()), res->observation.correlation(), g.matrix_format());
  };

  Json snap{{"strategy", o.strategy}, {"q_max", o.q_max},     {"tol", o.tol},
            {"partition", partition_note}, {"adjust_reference", o.reference}, {"p_max", o.p_max},
            {"seeds_per_p", o.seeds_per_p}, {"elbow_tau", o.tau}, {"zero_tol", o.zero_tol},
            {"b_corr", o.b_corr},       {"r_corr", o.r_corr},   {"cli", global_json(g)}};
  try {
    covloc::TuningResult res;
    if (o.strategy == "global") {
      res = covloc::di01_global(ens, b, r, h, opts);
    } else {
      auto plan = covloc::LocalizationPlan::make(
          h, *part, o.strategy == "reduction" ? covloc::Strategy::Reduction : covloc::Strategy::Adjustment,
          o.zero_tol);
      plan.reference = o.reference == "ensemble_mean" ? covloc::AdjustmentReference::EnsembleMean
                                                      : covloc::AdjustmentReference::PairBackground;
      res = covloc::di01_localized(ens, b, r, plan, opts);
      for (const auto& s : res.trace.skipped) std::cerr << "covloc: warning: " << s.reason << "\n";
    }
    run.phase("tune");
    write_outputs(&res, res.trace);
    run.phase("write");
    run.finish(snap, g.seed);
    std::cout << "records = " << res.trace.records.size() << ", converged = " << (res.trace.converged ? "yes" : "no")
              << "\n";
  } catch (const covloc::TuningAborted& e) {
    write_outputs(nullptr, e.trace());
    run.finish(snap, g.seed);
    throw;
  }
  return kOk;
}

// assimilate -----------------------------------------------------------------

struct AssimilateOptions {
  std::string xb, y, b_var, b_corr, r_var, r_corr, h_path;
};

int cmd_assimilate(const AssimilateOptions& o, const Global& g) {
  Run run("assimilate", g.out);
  run.input(o.xb);
  run.input(o.y);
  const covloc::Vector xb = covloc::io::load_vector(o.xb);
  const covloc::Vector y = covloc::io::load_vector(o.y);
  const covloc::CovarianceModel b = load_covariance(o.b_var, o.b_corr, g, run, "B");
  const covloc::CovarianceModel r = load_covariance(o.r_var, o.r_corr, g, run, "R");
  const covloc::Matrix h = load_operator(o.h_path, g, run);
  if (h.cols() != b.size() || h.rows() != r.size() || xb.size() != h.cols() || y.size() != h.rows())
    throw covloc::DomainError("dimension mismatch between x_b, y, B, R and H");
  run.prepare();
  run.phase("read");
  const covloc::LinearAnalysis sys(b.compose(), r.compose(), h);
  const auto res = sys.analyze(xb, y);
  run.phase("analysis");
  covloc::io::save_vector(run.path("xa.txt"), res.analysis);
  Run::write_json(run.path("analysis.json"), Json{{"J_b", res.cost_background},
                                                  {"J_o", res.cost_observation},
                                                  {"trace_KH", sys.trace_kh()},
                                                  {"trace_I_minus_HK", sys.trace_i_minus_hk()}});
  run.phase("write");
  run.finish(Json{{"b_corr", o.b_corr}, {"r_corr", o.r_corr}, {"cli", global_json(g)}}, g.seed);
  return kOk;
}

// experiment -----------------------------------------------------------------

int cmd_experiment(const std::string& config_path, const Global& g) {
  Run run("experiment", g.out);
  run.input(config_path);
  covloc::twin::ExperimentConfig cfg = covloc::report::config_from_json(load_json(config_path));
  if (g.seed_given) cfg.seed = g.seed;
  if (g.workers_given) cfg.workers = g.workers;
  run.prepare();
  const auto setup = covloc::twin::TwinSetup::make(cfg);
  run.phase("setup");
  const auto rep = covloc::twin::run_grid(setup);
  run.phase("grid");
  {
    std::ofstream out(run.path("gain.csv"));
    covloc::report::write_gain_csv(out, rep);
  }
  Run::write_json(run.path("summary.json"), covloc::report::gain_summary_json(rep));
  run.phase("write");
  // workers does not affect results; keep it out of the snapshot so reruns compare equal.
  Json snap = covloc::report::config_json(cfg);
  snap.erase("workers");
  snap["cli"] = Json{{"format", g.format}, {"out", g.out}};
  run.finish(snap, cfg.seed);
  std::cout << "p = " << rep.chosen_clusters << ", cells = " << rep.cells.size() << ", errors = " << rep.error_count
            << "\n";
  return kOk;
}

void add_covariance_options(CLI::App* sub, std::string& b_var, std::string& b_corr, std::string& r_var,
                            std::string& r_corr, std::string& h) {
  sub->add_option("--b-var", b_var, "background variances (one per line)")->required();
  sub->add_option("--b-corr", b_corr, "background correlation matrix file or balgovind:L")->required();
  sub->add_option("--r-var", r_var, "observation variances (one per line)")->required();
  sub->add_option("--r-corr", r_corr, "observation correlation matrix file or balgovind:L")->required();
  sub->add_option("-H,--operator", h, "observation operator matrix file")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-localized covariance tuning for data assimilation", "covloc"};
  app.set_version_flag("--version", covloc::kVersion);
  app.require_subcommand(1);

  Global g;
  app.add_option("--seed", g.seed, "root seed")->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--format", g.format, "matrix file format")->check(CLI::IsMember({"csv", "coo"}));
  app.add_option("--out", g.out, "output directory");
  app.add_option("--workers", g.workers, "worker threads for experiment")
      ->check(CLI::PositiveNumber)
      ->each([&](const std::string&) { g.workers_given = true; });
  app.fallthrough();

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-h", "generate a clustered binary observation operator");
  gen_cmd->add_option("--config", gen.config, "experiment config JSON (operator fields are used)");

  DetectOptions det;
  auto* det_cmd = app.add_subcommand("detect", "detect state clusters from an observation operator");
  det_cmd->add_option("H", det.h_path, "observation operator matrix file")->required();
  det_cmd->add_option("-p,--clusters", det.clusters, "cluster count or 'auto'");
  det_cmd->add_option("--p-max", det.p_max, "largest count scanned by auto");
  det_cmd->add_option("--seeds-per-p", det.seeds_per_p, "fluid runs per count")->check(CLI::PositiveNumber);
  det_cmd->add_option("--elbow-tau", det.tau, "elbow threshold for auto");
  det_cmd->add_flag("--unweighted", det.unweighted, "ignore edge weights");
  det_cmd->add_option("--max-iter", det.max_iter, "fluid sweeps")->check(CLI::PositiveNumber);
  det_cmd->add_option("--zero-tol", det.zero_tol, "entries with |H| <= tol are zero");

  TuneOptions tun;
  auto* tune_cmd = app.add_subcommand("tune", "tune B and R variances with DI01");
  tune_cmd->add_option("--xb", tun.xb, "background vector files")->required()->expected(1, -1);
  tune_cmd->add_option("--y", tun.y, "observation vector files")->required()->expected(1, -1);
  add_covariance_options(tune_cmd, tun.b_var, tun.b_corr, tun.r_var, tun.r_corr, tun.h_path);
  tune_cmd->add_option("--strategy", tun.strategy, "global, reduction or adjustment");
  tune_cmd->add_option("--qmax", tun.q_max, "maximum iterations per system")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--tol", tun.tol, "convergence tolerance on |s - 1|")->check(CLI::NonNegativeNumber);
  tune_cmd->add_option("--partition", tun.partition, "partition JSON file or 'auto'");
  tune_cmd->add_option("--adjust-reference", tun.reference, "ensemble_mean or pair_background");
  tune_cmd->add_option("--p-max", tun.p_max, "largest count scanned by auto");
  tune_cmd->add_option("--seeds-per-p", tun.seeds_per_p, "fluid runs per count")->check(CLI::PositiveNumber);
  tune_cmd->add_option("--elbow-tau", tun.tau, "elbow threshold for auto");
  tune_cmd->add_option("--zero-tol", tun.zero_tol, "entries with |H| <= tol are zero");

  std::string exp_config;
  auto* exp_cmd = app.add_subcommand("experiment", "run the twin-experiment gain grid");
  exp_cmd->add_option("config", exp_config, "experiment config JSON")->required();

  AssimilateOptions asm_opts;
  auto* asm_cmd = app.add_subcommand("assimilate", "one BLUE analysis, writes x_a");
  asm_cmd->add_option("--xb", asm_opts.xb, "background vector file")->required();
  asm_cmd->add_option("--y", asm_opts.y, "observation vector file")->required();
  add_covariance_options(asm_cmd, asm_opts.b_var, asm_opts.b_corr, asm_opts.r_var, asm_opts.r_corr, asm_opts.h_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_h(gen, g);
    if (*det_cmd) return cmd_detect(det, g);
    if (*tune_cmd) return cmd_tune(tun, g);
    if (*exp_cmd) return cmd_experiment(exp_config, g);
    if (*asm_cmd) return cmd_assimilate(asm_opts, g);
  } catch (const UsageError& e) {
    std::cerr << "covloc: usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const covloc::FormatError& e) {
    std::cerr << "covloc: input error: " << e.what() << "\n";
    return kInput;
  } catch (const covloc::DomainError& e) {
    std::cerr << "covloc: input error: " << e.what() << "\n";
    return kInput;
  } catch (const covloc::StrategyError& e) {
    std::cerr << "covloc: input error: " << e.what() << "\n";
    return kInput;
  } catch (const covloc::Error& e) {
    // DegenerateError, NumericalError, FactorizationError
    std::cerr << "covloc: numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "covloc: input error: " << e.what() << "\n";
    return kInput;
  }
  return kUsage;
}
