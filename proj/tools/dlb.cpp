// Command-line front end. Exit codes: 0 = all predicates passed,
// 1 = a predicate failed, 2 = usage/config error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <dlb/adversarial.hpp>
#include <dlb/harness.hpp>
#include <dlb/markov.hpp>
#include <dlb/spectral.hpp>

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  dlb::detail::ensure_parent_dirs(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct SimulateArgs {
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  bool exact = false;
};

int run_simulate(const SimulateArgs& a) {
  dlb::ExperimentConfig cfg = dlb::config_from_json(load_json(a.config_path));
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (a.seed) {
    // One master seed overrides both RNG consumers of the config.
    cfg.policy.seed = dlb::derive_seed(*a.seed, 0);
    if (cfg.x0.kind == dlb::X0Spec::Kind::random_discrepancy) {
      cfg.x0.seed = dlb::derive_seed(*a.seed, 1);
    }
  }
  if (a.exact) cfg.exact_ideal = true;
  const dlb::RunSummary s = dlb::run_experiment(cfg);
  std::cout << dlb::summary_to_json(s).dump(2) << "\n";
  return s.deviation_bound_ok && s.reached_target ? 0 : 1;
}

int run_sweep(const std::string& config_path, const std::string& out_dir, int parallelism) {
  json spec = load_json(config_path);
  std::vector<dlb::ExperimentConfig> configs = dlb::expand_sweep(spec);
  if (!out_dir.empty()) {
    for (auto& c : configs) {
      c.out_dir = (std::filesystem::path(out_dir) / c.name).string();
    }
  }
  const std::vector<dlb::RunSummary> rows = dlb::sweep(configs, parallelism);
  const dlb::Table table = dlb::summaries_to_table(rows);
  if (out_dir.empty()) {
    dlb::csv_write(std::cout, table);
  } else {
    const auto path = std::filesystem::path(out_dir) / "summary.csv";
    dlb::write_csv_file(path, table);
    std::cout << path.string() << "\n";
  }
  int failures = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++failures;
      std::cerr << "run " << r.name << " failed: " << r.error << "\n";
    }
  }
  return failures == 0 ? 0 : 1;
}

int run_spectrum(const std::string& graph_spec, std::optional<std::int64_t> K,
                 std::optional<std::int64_t> target) {
  const dlb::Graph g = dlb::parse_graph_spec(graph_spec);
  const dlb::SpectralReport numeric = dlb::numeric_lambda2(g);
  json out{{"graph", graph_spec},
           {"n", g.n},
           {"lambda2_numeric", numeric.lambda2},
           {"gap", 1.0 - numeric.lambda2},
           {"method", numeric.method},
           {"iterations", numeric.iterations}};
  try {
    out["lambda2_closed"] = dlb::closed_form_lambda2(g).lambda2;
  } catch (const std::invalid_argument&) {
    out["lambda2_closed"] = nullptr;  // no closed form for this family
  }
  if (K && target) {
    out["bound_steps"] = dlb::convergence_bound(numeric.lambda2, *K, g.n, *target);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_passage(const std::string& chain_path, int T, const std::string& out_dir) {
  const dlb::PathChain chain = dlb::pathchain_from_json(load_json(chain_path));
  const dlb::DistSeq fp = dlb::first_passage_path(chain, T);
  const std::vector<double> params = dlb::fill_decomposition(chain);
  const dlb::DistSeq conv = dlb::geometric_convolution(params, T);
  double conv_err = 0.0;
  for (int t = 0; t <= T; ++t) conv_err = std::max(conv_err, std::abs(fp.values[t] - conv.values[t]));

  const bool log_concave = dlb::is_log_concave(fp);
  const bool unimodal = dlb::is_unimodal(fp);
  const int extrema = dlb::count_local_extrema(fp);
  json cert{{"d", chain.d},
            {"log_concave", log_concave},
            {"unimodal", unimodal},
            {"extrema_count", extrema},
            {"geometric_params", params},
            {"max_convolution_err", conv_err}};

  std::ostringstream csv;
  csv << "t,first_passage,convolution\n";
  for (int t = 0; t <= T; ++t) {
    csv << t << "," << dlb::detail::fmt_double(fp.values[t]) << ","
        << dlb::detail::fmt_double(conv.values[t]) << "\n";
  }
  if (out_dir.empty()) {
    std::cout << cert.dump(2) << "\n";
  } else {
    write_text((std::filesystem::path(out_dir) / "passage.csv").string(), csv.str());
    write_text((std::filesystem::path(out_dir) / "certificate.json").string(), cert.dump(2) + "\n");
    std::cout << cert.dump(2) << "\n";
  }
  return log_concave && unimodal && conv_err <= 1e-10 ? 0 : 1;
}

int run_cube(int d, int T) {
  bool unimodal_all = true;
  int max_extrema = 0;
  double proj_vs_balls = 0.0;
  const int t_short = std::min(T, 50);
  for (int ell = 0; ell <= d; ++ell) {
    const dlb::DistSeq proj = dlb::hypercube_transition_via_projection(d, ell, T);
    const dlb::DistSeq balls = dlb::balls_and_bins_transition(d, ell, t_short);
    const int extrema = dlb::count_local_extrema(proj);
    max_extrema = std::max(max_extrema, extrema);
    unimodal_all = unimodal_all && extrema <= 1;
    for (int t = 0; t <= t_short; ++t) {
      proj_vs_balls = std::max(proj_vs_balls, std::abs(proj.values[t] - balls.values[t]));
    }
  }
  const bool monotone_upper = dlb::check_appendix_monotonicity(d, T);
  json out{{"d", d},
           {"T", T},
           {"unimodal_all_weights", unimodal_all},
           {"max_extrema", max_extrema},
           {"projection_vs_balls_err", proj_vs_balls},
           {"monotone_upper_half", monotone_upper}};
  std::cout << out.dump(2) << "\n";
  return unimodal_all && proj_vs_balls <= 1e-12 && monotone_upper ? 0 : 1;
}

int run_instance(const std::string& name, const std::string& params_text, const std::string& out_path) {
  const json params = params_text.empty() ? json::object() : json::parse(params_text);
  const dlb::InstanceBundle b = dlb::make_instance(name, params);
  const std::string text = dlb::bundle_to_json(b).dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
  return 0;
}

int run_verify(const std::string& bundle_path, std::optional<std::int64_t> T,
               std::optional<int> trials, std::optional<std::uint64_t> seed) {
  const dlb::InstanceBundle b = dlb::bundle_from_json(load_json(bundle_path));
  dlb::VerifyOptions opts;
  if (T) opts.T = *T;
  if (trials) opts.trials = *trials;
  if (seed) opts.seed = *seed;
  const dlb::VerifyResult r = dlb::verify_bundle(b, opts);
  json out{{"pass", r.pass}, {"detail", r.detail}, {"data", r.data}};
  std::cout << out.dump(2) << "\n";
  return r.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion load-balancing simulator and analysis toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run one experiment config");
  simulate->add_option("--config", sim.config_path, "experiment config JSON")->required();
  simulate->add_option("--out", sim.out_dir, "output directory (overrides config)");
  simulate->add_option("--seed", sim.seed, "master seed override");
  simulate->add_flag("--exact", sim.exact, "exact rational idealized tracking");

  std::string sweep_config, sweep_out;
  int parallelism = 1;
  auto* sw = app.add_subcommand("sweep", "run a batch of experiment configs");
  sw->add_option("--config", sweep_config, "sweep spec JSON")->required();
  sw->add_option("--out", sweep_out, "output directory for table + per-run artifacts");
  sw->add_option("--parallelism", parallelism, "concurrent runs")->check(CLI::PositiveNumber);

  auto* analyze = app.add_subcommand("analyze", "spectral and Markov-chain analyses");
  analyze->require_subcommand(1);

  std::string spec_graph;
  std::optional<std::int64_t> spec_K, spec_target;
  auto* spectrum = analyze->add_subcommand("spectrum", "second eigenvalue and convergence bound");
  spectrum->add_option("--graph", spec_graph, "graph spec, e.g. torus:8x8")->required();
  spectrum->add_option("--K", spec_K, "initial discrepancy for the step bound");
  spectrum->add_option("--target", spec_target, "target discrepancy for the step bound");

  std::string chain_path, passage_out;
  int passage_T = 300;
  auto* passage = analyze->add_subcommand("passage", "first-passage analysis of a path chain");
  passage->add_option("--chain", chain_path, "PathChain JSON file")->required();
  passage->add_option("--T", passage_T, "horizon")->check(CLI::PositiveNumber);
  passage->add_option("--out", passage_out, "output directory for CSV + certificate");

  int cube_d = 0, cube_T = 500;
  auto* cube = analyze->add_subcommand("cube", "hypercube transition shape checks");
  cube->add_option("--d", cube_d, "hypercube dimension")->required()->check(CLI::Range(1, 12));
  cube->add_option("--T", cube_T, "horizon")->check(CLI::PositiveNumber);

  std::string inst_name, inst_params, inst_out;
  auto* instance = app.add_subcommand("instance", "emit a named adversarial instance bundle");
  instance->add_option("name", inst_name, "rsw_stuck | hypercube_halfload | randomized_halfload | torus_polylog")
      ->required();
  instance->add_option("--params", inst_params, "generator parameters as JSON");
  instance->add_option("--out", inst_out, "output file (default stdout)");

  std::string bundle_path;
  std::optional<std::int64_t> verify_T;
  std::optional<int> verify_trials;
  std::optional<std::uint64_t> verify_seed;
  auto* verify = app.add_subcommand("verify", "check an instance bundle's predicate");
  verify->add_option("bundle", bundle_path, "instance bundle JSON file")->required();
  verify->add_option("--T", verify_T, "horizon override");
  verify->add_option("--trials", verify_trials, "trial count for statistical predicates");
  verify->add_option("--seed", verify_seed, "master seed for statistical predicates");

  try {
    app.parse(argc, argv);
    if (*simulate) return run_simulate(sim);
    if (*sw) return run_sweep(sweep_config, sweep_out, parallelism);
    if (*spectrum) return run_spectrum(spec_graph, spec_K, spec_target);
    if (*passage) return run_passage(chain_path, passage_T, passage_out);
    if (*cube) return run_cube(cube_d, cube_T);
    if (*instance) return run_instance(inst_name, inst_params, inst_out);
    if (*verify) return run_verify(bundle_path, verify_T, verify_trials, verify_seed);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
