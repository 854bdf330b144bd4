// fbmstm command line: fGn sampling, theta-scheme ensembles, stability
// scans, and direct access to the closed-form predicates and special
// functions. Exit codes: 0 success, 2 configuration/validation error,
// 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fbmstm/csv.hpp"
#include "fbmstm/errors.hpp"
#include "fbmstm/fbm.hpp"
#include "fbmstm/lab.hpp"
#include "fbmstm/models.hpp"
#include "fbmstm/special.hpp"
#include "fbmstm/stm.hpp"
#include "fbmstm/theory.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fbmstm;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// INI config support: [section] blocks with key = value lines map onto the
// dotted option names (--section.key). CLI11's stock formatter would route
// sections to subcommands instead, so this formatter flattens them.
class SectionedIni : public CLI::ConfigBase {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(input, line)) {
      ++line_no;
      std::string text = CLI::detail::trim_copy(line);
      if (text.empty() || text.front() == '#' || text.front() == ';') continue;
      if (text.front() == '[') {
        if (text.back() != ']')
          throw CLI::FileError("config line " + std::to_string(line_no) +
                               ": malformed section header");
        section = CLI::detail::trim_copy(text.substr(1, text.size() - 2));
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos)
        throw CLI::FileError("config line " + std::to_string(line_no) +
                             ": expected key = value");
      std::string key = CLI::detail::trim_copy(text.substr(0, eq));
      std::string value = CLI::detail::trim_copy(text.substr(eq + 1));
      if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                (value.front() == '\'' && value.back() == '\'')))
        value = value.substr(1, value.size() - 2);
      if (key.empty())
        throw CLI::FileError("config line " + std::to_string(line_no) + ": empty key");
      CLI::ConfigItem item;
      item.name = section.empty() ? key : section + "." + key;
      item.inputs.push_back(value);
      items.push_back(std::move(item));
    }
    return items;
  }

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    std::ostringstream out;
    std::string current_section;
    for (const CLI::Option* opt : app->get_options()) {
      if (!opt->get_configurable()) continue;
      const std::string name = opt->get_single_name();
      const auto dot = name.find('.');
      if (dot == std::string::npos) continue;
      std::string value;
      if (opt->count() > 0)
        value = CLI::detail::join(opt->results(), ",");
      else if (default_also)
        value = opt->get_default_str();
      else
        continue;
      const std::string section = name.substr(0, dot);
      if (section != current_section) {
        if (!current_section.empty()) out << "\n";
        out << "[" << section << "]\n";
        current_section = section;
      }
      out << name.substr(dot + 1) << " = " << value << "\n";
    }
    return out.str();
  }
};

struct RunConfig {
  // model
  std::string model_kind = "linear";
  double lambda = 9.0;
  double lambda_bar = 0.0;  // 0 = same as lambda
  double mu = 2.0;
  std::string kappa_text = "2H";
  double x0 = 3.0;
  std::string sign_convention = "canonical";
  // scheme
  double theta = 1.0;
  double dt = 0.5;
  std::int64_t n_steps = 512;
  // fbm
  double hurst = 0.7;
  std::string method = "circulant";
  // ensemble
  std::int64_t n_paths = 2000;
  std::uint64_t master_seed = 1;
  std::int64_t record_stride = 0;
  double burn_in_fraction = 0.2;
  // output
  std::string directory = "out";
  std::string format = "csv";
  std::int64_t trajectories = 0;  // simulate: also export this many sample paths
};

void add_model_options(CLI::App* cmd, RunConfig& cfg) {  // options live on the main app

  cmd->add_option("--model.kind", cfg.model_kind,
                  "linear | cubic_drift | cubic_drift_sin_diffusion")
      ->check(CLI::IsMember({"linear", "cubic_drift", "cubic_drift_sin_diffusion"}))
      ->capture_default_str();
  cmd->add_option("--model.lambda", cfg.lambda, "drift rate")->capture_default_str();
  cmd->add_option("--model.lambda_bar", cfg.lambda_bar,
                  "drift linear-growth constant (0 = lambda)")
      ->capture_default_str();
  cmd->add_option("--model.mu", cfg.mu, "diffusion rate")->capture_default_str();
  cmd->add_option("--model.kappa", cfg.kappa_text, "drift time exponent, number or \"2H\"")
      ->capture_default_str();
  cmd->add_option("--model.x0", cfg.x0, "initial value (nonzero)")->capture_default_str();
  cmd->add_option("--model.sign_convention", cfg.sign_convention,
                  "canonical (drift -lambda...) | example41 (+lambda)")
      ->check(CLI::IsMember({"canonical", "example41"}))
      ->capture_default_str();
}

void add_scheme_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--scheme.theta", cfg.theta, "theta in [0,1]")->capture_default_str();
  cmd->add_option("--scheme.dt", cfg.dt, "step size")->capture_default_str();
  cmd->add_option("--scheme.n_steps", cfg.n_steps, "number of steps")->capture_default_str();
}

CLI::Option* add_fbm_options(CLI::App* cmd, RunConfig& cfg) {
  auto* hurst = cmd->add_option("--fbm.hurst", cfg.hurst, "Hurst parameter in [0.5, 1)")
                    ->capture_default_str();
  cmd->add_option("--fbm.method", cfg.method, "cholesky | circulant")
      ->check(CLI::IsMember({"cholesky", "circulant"}))
      ->capture_default_str();
  return hurst;
}

void add_ensemble_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--ensemble.n_paths", cfg.n_paths, "Monte Carlo paths")->capture_default_str();
  cmd->add_option("--ensemble.master_seed", cfg.master_seed, "master seed")
      ->capture_default_str();
  cmd->add_option("--ensemble.record_stride", cfg.record_stride,
                  "recording stride (0 = auto)")
      ->capture_default_str();
  cmd->add_option("--ensemble.burn_in_fraction", cfg.burn_in_fraction,
                  "burn-in fraction for the verdict fit")
      ->capture_default_str();
}

void add_output_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--output.directory", cfg.directory, "output directory")
      ->capture_default_str();
  cmd->add_option("--output.format", cfg.format, "output format (csv)")
      ->check(CLI::IsMember({"csv"}))
      ->capture_default_str();
  cmd->add_option("--output.trajectories", cfg.trajectories,
                  "simulate: number of sample trajectories to export")
      ->capture_default_str();
}

void configure_subcommand(CLI::App* cmd) {
  cmd->set_config("--config", "", "INI config file (sections map to key prefixes)");
  cmd->config_formatter(std::make_shared<SectionedIni>());
  cmd->allow_config_extras(false);
}

double resolve_kappa(const RunConfig& cfg) {
  if (cfg.kappa_text == "2H" || cfg.kappa_text == "2h") return 2.0 * cfg.hurst;
  try {
    std::size_t used = 0;
    const double v = std::stod(cfg.kappa_text, &used);
    if (used != cfg.kappa_text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::domain_error("model.kappa: expected a number or \"2H\", got \"" +
                            cfg.kappa_text + "\"");
  }
}

SignConvention resolve_convention(const RunConfig& cfg) {
  return cfg.sign_convention == "example41" ? SignConvention::Example41
                                            : SignConvention::Canonical;
}

SamplingMethod resolve_method(const RunConfig& cfg) {
  return cfg.method == "cholesky" ? SamplingMethod::ExactCholesky
                                  : SamplingMethod::CirculantEmbedding;
}

LinearTestModel linear_model_from(const RunConfig& cfg) {
  return make_linear_model(cfg.lambda, cfg.mu, resolve_kappa(cfg), cfg.x0,
                           resolve_convention(cfg));
}

NonlinearModel nonlinear_model_from(const RunConfig& cfg) {
  const double kappa = resolve_kappa(cfg);
  const double lambda = resolve_convention(cfg) == SignConvention::Example41
                            ? -cfg.lambda
                            : cfg.lambda;
  if (cfg.model_kind == "cubic_drift") return make_cubic_drift(lambda, kappa, cfg.mu, cfg.x0);
  return make_cubic_drift_sin_diffusion(lambda, kappa, cfg.x0);
}

EnsembleConfig ensemble_from(const RunConfig& cfg) {
  EnsembleConfig ec;
  ec.n_paths = cfg.n_paths;
  ec.master_seed = cfg.master_seed;
  ec.record_stride = cfg.record_stride;
  ec.burn_in_fraction = cfg.burn_in_fraction;
  ec.validate();
  return ec;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open output file: " + path.string());
  return os;
}

void write_plot_script(const fs::path& dir, bool with_exact) {
  std::ofstream gp = open_output(dir / "plot.gp");
  gp << "# gnuplot script: mean-square trajectory on a log-log scale\n"
        "set datafile separator ','\n"
        "set logscale x\n"
        "set xlabel 't'\n"
        "set ylabel 'log E|X|^2 (nats)'\n"
        "set key left bottom\n"
        "plot 'mean_square.csv' using 2:3 every ::1 with lines title 'STM ensemble'";
  if (with_exact)
    gp << ", \\\n     'exact_mean_square.csv' using 2:3 every ::1 with lines title 'exact'";
  gp << "\n";
}

int cmd_sample_fbm(const RunConfig& cfg) {
  FbmGrid grid{cfg.hurst, cfg.dt, cfg.n_steps};
  grid.validate();
  const EnsembleConfig ec = ensemble_from(cfg);
  FgnSampler sampler(grid, resolve_method(cfg));

  fs::create_directories(cfg.directory);
  const IncrementBlock first = sampler.sample(ec.master_seed, 0);
  {
    auto os = open_output(fs::path(cfg.directory) / "increments.csv");
    write_increments_csv(os, first);
  }
  {
    auto os = open_output(fs::path(cfg.directory) / "path.csv");
    const auto path = cumulative_path(first);
    write_path_csv(os, grid, path);
  }

  // Ensemble summary statistics against the analytic law.
  double sum_sq = 0.0, sum_lag1 = 0.0;
  std::int64_t n_sq = 0, n_lag1 = 0;
  std::vector<double> buf(static_cast<std::size_t>(grid.n_steps));
  for (std::int64_t p = 0; p < ec.n_paths; ++p) {
    sampler.sample_into(ec.master_seed, static_cast<std::uint64_t>(p), buf);
    for (std::size_t j = 0; j < buf.size(); ++j) {
      sum_sq += buf[j] * buf[j];
      ++n_sq;
      if (j + 1 < buf.size()) {
        sum_lag1 += buf[j] * buf[j + 1];
        ++n_lag1;
      }
    }
  }
  const double var_emp = sum_sq / static_cast<double>(n_sq);
  const double lag1_emp = sum_lag1 / static_cast<double>(n_lag1);
  const double var_ref = increment_covariance(0, cfg.dt, cfg.hurst);
  const double lag1_ref = increment_covariance(1, cfg.dt, cfg.hurst);
  std::cout << "paths=" << ec.n_paths << "\n"
            << "empirical_variance=" << format_g17(var_emp) << "\n"
            << "analytic_variance=" << format_g17(var_ref) << "\n"
            << "empirical_lag1_covariance=" << format_g17(lag1_emp) << "\n"
            << "analytic_lag1_covariance=" << format_g17(lag1_ref) << "\n"
            << "empirical_lag1_correlation=" << format_g17(lag1_emp / var_emp) << "\n"
            << "analytic_lag1_correlation=" << format_g17(lag1_ref / var_ref) << "\n";
  return 0;
}

void print_verdict(std::ostream& os, const StabilityVerdict& verdict,
                   const MeanSquareSeries& series, const TheoremVerdict& theorem,
                   bool continuous_stable) {
  os << "label=" << to_string(verdict.label) << " slope=" << format_g17(verdict.slope)
     << " slope_ci=" << format_g17(verdict.slope_ci) << " drop=" << format_g17(verdict.drop)
     << " diverged_fraction=" << format_g17(series.final_diverged_fraction())
     << " n_paths=" << series.n_paths << " theorem_source=" << to_string(theorem.source)
     << " guaranteed=" << to_string(theorem.guaranteed)
     << " continuous_stable=" << (continuous_stable ? "true" : "false") << "\n";
}

TheoremVerdict classify_by_theorem(double kappa, double hurst, double theta, double lambda,
                                   double mu, double dt, bool linear,
                                   const AssumptionConstants* constants) {
  if (hurst == 0.5) return brownian_classify(lambda, mu, kappa, theta, dt);
  if (linear) return theorem1_classify(kappa, hurst, theta);
  return theorem2_classify(*constants, theta, hurst);
}

int cmd_simulate(const RunConfig& cfg) {
  const double kappa = resolve_kappa(cfg);
  FbmGrid grid{cfg.hurst, cfg.dt, cfg.n_steps};
  grid.validate();
  ThetaScheme scheme{cfg.theta, cfg.dt, cfg.n_steps};
  scheme.validate();
  const EnsembleConfig ec = ensemble_from(cfg);
  const bool linear = cfg.model_kind == "linear";

  MeanSquareSeries series;
  TheoremVerdict theorem;
  bool continuous_stable = false;
  if (linear) {
    const LinearTestModel model = linear_model_from(cfg);
    series = run_ensemble(model, scheme, grid, ec, resolve_method(cfg));
    theorem = classify_by_theorem(kappa, cfg.hurst, cfg.theta, model.lambda, model.mu, cfg.dt,
                                  true, nullptr);
    continuous_stable = continuous_stability(model.lambda, model.mu, kappa, cfg.hurst);
  } else {
    const NonlinearModel model = nonlinear_model_from(cfg);
    series = run_ensemble(model, scheme, grid, ec, resolve_method(cfg));
    theorem = classify_by_theorem(kappa, cfg.hurst, cfg.theta, model.constants.lambda,
                                  model.constants.mu, cfg.dt, false, &model.constants);
    continuous_stable = continuous_stability(model.constants.lambda, model.constants.mu,
                                             kappa, cfg.hurst);
  }
  const StabilityVerdict verdict = classify(series, 0.0, 2.0, ec.burn_in_fraction);

  fs::create_directories(cfg.directory);
  {
    auto os = open_output(fs::path(cfg.directory) / "mean_square.csv");
    write_series_csv(os, series);
  }
  if (linear) {
    const LinearTestModel model = linear_model_from(cfg);
    auto os = open_output(fs::path(cfg.directory) / "exact_mean_square.csv");
    os << "step,t,log_mean_square\n";
    for (std::size_t r = 0; r < series.steps.size(); ++r) {
      const double t = cfg.dt * static_cast<double>(series.steps[r]);
      const double ms = exact_mean_square_linear(model, cfg.hurst, t);
      os << series.steps[r] << ',' << format_g17(t) << ',' << format_g17(std::log(ms)) << '\n';
    }
  }
  {
    auto os = open_output(fs::path(cfg.directory) / "verdict.txt");
    print_verdict(os, verdict, series, theorem, continuous_stable);
  }
  for (std::int64_t s = 0; s < cfg.trajectories; ++s) {
    FgnSampler sampler(grid, resolve_method(cfg));
    const IncrementBlock block = sampler.sample(ec.master_seed, static_cast<std::uint64_t>(s));
    const Trajectory traj = linear ? simulate_linear(linear_model_from(cfg), scheme, block)
                                   : simulate_nonlinear(nonlinear_model_from(cfg), scheme, block);
    auto os = open_output(fs::path(cfg.directory) /
                          ("trajectory_" + std::to_string(s) + ".csv"));
    write_trajectory_csv(os, traj);
  }
  write_plot_script(cfg.directory, linear);
  print_verdict(std::cout, verdict, series, theorem, continuous_stable);
  return 0;
}

std::vector<double> parse_grid_list(const std::vector<std::string>& items, double hurst,
                                    const char* what) {
  std::vector<double> values;
  for (const auto& item : items) {
    if (item == "2H" || item == "2h") {
      values.push_back(2.0 * hurst);
      continue;
    }
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw std::domain_error(std::string(what) + ": cannot parse \"" + item + "\"");
    }
  }
  if (values.empty()) throw std::domain_error(std::string(what) + ": empty grid");
  return values;
}

int cmd_scan(const RunConfig& cfg, const std::vector<std::string>& theta_list,
             const std::vector<std::string>& hurst_list,
             const std::vector<std::string>& kappa_list,
             const std::vector<std::string>& dt_list) {
  const auto thetas = parse_grid_list(theta_list, 0.0, "grid.theta");
  const auto hursts = parse_grid_list(hurst_list, 0.0, "grid.hurst");
  const auto dts = parse_grid_list(dt_list, 0.0, "grid.dt");

  std::size_t cells = thetas.size() * hursts.size() * dts.size() * kappa_list.size();
  if (cells == 0 || cells > 1024)
    throw std::domain_error("scan: grid must have between 1 and 1024 cells");

  fs::create_directories(cfg.directory);
  auto os = open_output(fs::path(cfg.directory) / "scan.csv");
  os << "theta,hurst,kappa,dt,theorem_source,guaranteed,empirical,slope\n";

  for (double hurst : hursts) {
    const auto kappas = parse_grid_list(kappa_list, hurst, "grid.kappa");
    for (double kappa : kappas) {
      for (double theta : thetas) {
        for (double dt : dts) {
          RunConfig cell = cfg;
          cell.hurst = hurst;
          cell.theta = theta;
          cell.dt = dt;
          std::ostringstream kappa_text;
          kappa_text << format_g17(kappa);
          cell.kappa_text = kappa_text.str();

          const LinearTestModel model = linear_model_from(cell);
          FbmGrid grid{hurst, dt, cfg.n_steps};
          grid.validate();
          ThetaScheme scheme{theta, dt, cfg.n_steps};
          scheme.validate();
          const EnsembleConfig ec = ensemble_from(cell);
          const TheoremVerdict theorem = classify_by_theorem(
              kappa, hurst, theta, model.lambda, model.mu, dt, true, nullptr);
          const MeanSquareSeries series =
              run_ensemble(model, scheme, grid, ec, resolve_method(cell));
          const StabilityVerdict verdict = classify(series, 0.0, 2.0, ec.burn_in_fraction);
          os << format_g17(theta) << ',' << format_g17(hurst) << ',' << format_g17(kappa)
             << ',' << format_g17(dt) << ',' << to_string(theorem.source) << ','
             << to_string(theorem.guaranteed) << ',' << to_string(verdict.label) << ','
             << format_g17(verdict.slope) << '\n';
        }
      }
    }
  }
  std::cout << "cells=" << cells << " written=" << (fs::path(cfg.directory) / "scan.csv").string()
            << "\n";
  return 0;
}

struct TheoryArgs {
  double lambda = 9.0;
  double lambda_bar = 0.0;
  double mu = 2.0;
  double mu_sq = -1.0;  // brownian: mu^2 may be given directly
  std::string kappa_text = "2H";
  double hurst = 0.7;
  double theta = 0.8;
  double dt = 0.5;
  std::int64_t n = 1;
  int p = 2;
};

double theory_kappa(const TheoryArgs& args) {
  if (args.kappa_text == "2H" || args.kappa_text == "2h") return 2.0 * args.hurst;
  try {
    return std::stod(args.kappa_text);
  } catch (const std::exception&) {
    throw std::domain_error("kappa: expected a number or \"2H\"");
  }
}

int cmd_theory_classify(const TheoryArgs& args) {
  const double kappa = theory_kappa(args);
  const double lambda_bar = args.lambda_bar > 0.0 ? args.lambda_bar : args.lambda;
  const bool continuous = continuous_stability(args.lambda, args.mu, kappa, args.hurst);
  std::cout << "continuous_stable=" << (continuous ? "true" : "false") << "\n";
  std::cout << "theorem1_threshold=" << format_g17(theorem1_threshold()) << "\n";
  if (args.hurst == 0.5) {
    const TheoremVerdict verdict =
        brownian_classify(args.lambda, args.mu, kappa, args.theta, args.dt);
    std::cout << "source=" << to_string(verdict.source)
              << "\nguaranteed=" << to_string(verdict.guaranteed) << "\ndetail=" << verdict.detail
              << "\n";
    return 0;
  }
  const TheoremVerdict verdict = theorem1_classify(kappa, args.hurst, args.theta);
  std::cout << "source=" << to_string(verdict.source)
            << "\nguaranteed=" << to_string(verdict.guaranteed) << "\ndetail=" << verdict.detail
            << "\n";
  AssumptionConstants constants{args.lambda, lambda_bar, args.mu, kappa};
  const TheoremVerdict nonlinear = theorem2_classify(constants, args.theta, args.hurst);
  std::cout << "theorem2_threshold=" << format_g17(theorem2_threshold(lambda_bar / args.lambda))
            << "\nnonlinear_source=" << to_string(nonlinear.source)
            << "\nnonlinear_guaranteed=" << to_string(nonlinear.guaranteed) << "\n";
  return 0;
}

int cmd_theory_brownian(const TheoryArgs& args) {
  const double mu_sq = args.mu_sq >= 0.0 ? args.mu_sq : args.mu * args.mu;
  const double mu = std::sqrt(mu_sq);
  const double kappa = args.kappa_text == "2H" ? 1.0 : theory_kappa(args);
  const TheoremVerdict verdict = brownian_classify(args.lambda, mu, kappa, args.theta, args.dt);
  std::cout << "source=" << to_string(verdict.source)
            << "\nguaranteed=" << to_string(verdict.guaranteed) << "\ndetail=" << verdict.detail
            << "\nper_step_excess="
            << format_g17(brownian_per_step_excess(args.lambda, mu_sq, args.theta, args.dt))
            << "\n";
  if (args.theta < 0.5)
    std::cout << "dt_threshold="
              << format_g17(brownian_dt_threshold(args.lambda, mu_sq, args.theta)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic theta method stability lab for fBm-driven SDEs"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  bool dump_config = false;

  // One flat option set shared by the run subcommands; the INI sections of a
  // --config file map onto the dotted names.
  configure_subcommand(&app);
  add_model_options(&app, cfg);
  add_scheme_options(&app, cfg);
  CLI::Option* hurst_opt = add_fbm_options(&app, cfg);
  add_ensemble_options(&app, cfg);
  add_output_options(&app, cfg);
  app.add_flag("--dump-config", dump_config, "print the resolved config and exit");

  std::vector<std::string> theta_list{"0.4", "0.8"};
  std::vector<std::string> hurst_list{"0.7"};
  std::vector<std::string> kappa_list{"2H"};
  std::vector<std::string> dt_list{"0.5"};
  app.add_option("--grid.theta", theta_list, "scan: theta values")->delimiter(',');
  app.add_option("--grid.hurst", hurst_list, "scan: hurst values")->delimiter(',');
  app.add_option("--grid.kappa", kappa_list, "scan: kappa values (numbers or 2H)")
      ->delimiter(',');
  app.add_option("--grid.dt", dt_list, "scan: dt values")->delimiter(',');

  auto* sample = app.add_subcommand("sample-fbm", "sample fGn increments and export CSV");
  sample->fallthrough();
  auto* simulate = app.add_subcommand("simulate", "run a theta-scheme ensemble");
  simulate->fallthrough();
  auto* scan = app.add_subcommand("scan", "verdicts over a parameter grid");
  scan->fallthrough();

  auto* theory = app.add_subcommand("theory", "closed-form stability predicates");
  theory->require_subcommand(1);
  TheoryArgs targs;
  auto* classify_cmd = theory->add_subcommand("classify", "theorem classification");
  classify_cmd->add_option("--lambda", targs.lambda)->capture_default_str();
  classify_cmd->add_option("--lambda-bar", targs.lambda_bar)->capture_default_str();
  classify_cmd->add_option("--mu", targs.mu)->capture_default_str();
  classify_cmd->add_option("--kappa", targs.kappa_text)->capture_default_str();
  classify_cmd->add_option("--hurst", targs.hurst)->capture_default_str();
  classify_cmd->add_option("--theta", targs.theta)->capture_default_str();
  classify_cmd->add_option("--dt", targs.dt)->capture_default_str();

  auto* remark = theory->add_subcommand("remark-p", "p-th moment thresholds");
  remark->add_option("p", targs.p, "even moment order >= 2")->required();

  auto* brownian = theory->add_subcommand("brownian", "H = 1/2 proposition");
  brownian->add_option("--lambda", targs.lambda)->capture_default_str();
  brownian->add_option("--mu", targs.mu)->capture_default_str();
  brownian->add_option("--mu2", targs.mu_sq, "mu^2 directly")->capture_default_str();
  brownian->add_option("--kappa", targs.kappa_text)->capture_default_str();
  brownian->add_option("--theta", targs.theta)->capture_default_str();
  brownian->add_option("--dt", targs.dt)->capture_default_str();

  auto* envelope = theory->add_subcommand("envelope", "log asymptotic envelope bound");
  envelope->add_option("n", targs.n, "number of factors")->required();
  envelope->add_option("--theta", targs.theta)->capture_default_str();

  auto* sigma = theory->add_subcommand("sigma-tilde", "all-ones quadratic form");
  sigma->add_option("n", targs.n, "number of factors")->required();
  sigma->add_option("--theta", targs.theta)->capture_default_str();
  sigma->add_option("--lambda", targs.lambda)->capture_default_str();
  sigma->add_option("--mu", targs.mu)->capture_default_str();
  sigma->add_option("--kappa", targs.kappa_text)->capture_default_str();
  sigma->add_option("--hurst", targs.hurst)->capture_default_str();
  sigma->add_option("--dt", targs.dt)->capture_default_str();

  auto* special = app.add_subcommand("special", "special function evaluation");
  special->require_subcommand(1);
  std::vector<double> sargs;
  auto* gamma_cmd = special->add_subcommand("gamma", "log_gamma(x)");
  gamma_cmd->add_option("args", sargs, "x")->expected(1);
  auto* phi_cmd = special->add_subcommand("phi", "kummer_phi(a, b, z)");
  phi_cmd->add_option("args", sargs, "a b z")->expected(3);
  auto* u_cmd = special->add_subcommand("u", "parabolic_u(a, z)");
  u_cmd->add_option("args", sargs, "a z")->expected(2);
  auto* moment_cmd = special->add_subcommand("moment", "gaussian_raw_moment(mean, std, order)");
  moment_cmd->add_option("args", sargs, "mean std order")->expected(3);
  auto* moment_log_cmd =
      special->add_subcommand("moment-log", "gaussian_raw_moment_log(mean, std, order)");
  moment_log_cmd->add_option("args", sargs, "mean std order")->expected(3);

  auto* selftest = app.add_subcommand("selftest", "quick internal consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (dump_config) {
      std::cout << app.config_to_str(true, false);
      return 0;
    }
    if (sample->parsed()) {
      if (hurst_opt->count() == 0)
        throw std::domain_error("missing required key fbm.hurst (set it on the command "
                                "line or in the [fbm] config section)");
      return cmd_sample_fbm(cfg);
    }
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (scan->parsed()) return cmd_scan(cfg, theta_list, hurst_list, kappa_list, dt_list);
    if (theory->parsed()) {
      if (classify_cmd->parsed()) return cmd_theory_classify(targs);
      if (remark->parsed()) {
        const PThreshold t = remark_p_threshold(targs.p);
        std::cout << "m_p=" << format_g17(t.m_p)
                  << "\ntheta_threshold=" << format_g17(t.theta_threshold) << "\n";
        return 0;
      }
      if (brownian->parsed()) return cmd_theory_brownian(targs);
      if (envelope->parsed()) {
        std::cout << "log_envelope=" << format_g17(envelope_bound_log(targs.n, targs.theta))
                  << "\n";
        return 0;
      }
      if (sigma->parsed()) {
        std::vector<int> signs(static_cast<std::size_t>(targs.n), 1);
        const auto parts = sigma_tilde_sq(targs.n, targs.theta, targs.lambda, targs.mu,
                                          theory_kappa(targs), targs.dt, targs.hurst, signs);
        std::cout << "sigma_tilde_sq=" << format_g17(parts.variance)
                  << "\nweighted_alpha_sum=" << format_g17(parts.mean) << "\n";
        return 0;
      }
    }
    if (special->parsed()) {
      if (gamma_cmd->parsed()) {
        std::cout << format_g17(log_gamma(sargs.at(0))) << "\n";
        return 0;
      }
      if (phi_cmd->parsed()) {
        std::cout << format_g17(kummer_phi(sargs.at(0), sargs.at(1), sargs.at(2))) << "\n";
        return 0;
      }
      if (u_cmd->parsed()) {
        std::cout << format_g17(parabolic_u(sargs.at(0), sargs.at(1))) << "\n";
        return 0;
      }
      if (moment_cmd->parsed()) {
        const GaussianScalar g{sargs.at(0), sargs.at(1)};
        std::cout << format_g17(gaussian_raw_moment(g, static_cast<int>(sargs.at(2)))) << "\n";
        return 0;
      }
      if (moment_log_cmd->parsed()) {
        const GaussianScalar g{sargs.at(0), sargs.at(1)};
        const SignedLog m = gaussian_raw_moment_log(g, static_cast<std::int64_t>(sargs.at(2)));
        std::cout << "sign=" << m.sign << " log_abs=" << format_g17(m.log_abs) << "\n";
        return 0;
      }
    }
    if (selftest->parsed()) {
      // Spot checks that fail loudly if the build is miswired.
      const double thr = theorem1_threshold();
      if (std::abs(thr - 0.769010532935) > 1e-9) throw Error("selftest: theorem1 threshold");
      if (std::abs(kummer_phi(1, 1, 1) - std::exp(1.0)) > 1e-12)
        throw Error("selftest: kummer_phi(1,1,1)");
      const IncrementBlock a = sample_increments({0.75, 0.5, 32},
                                                 SamplingMethod::CirculantEmbedding, 42, 7);
      const IncrementBlock b = sample_increments({0.75, 0.5, 32},
                                                 SamplingMethod::CirculantEmbedding, 42, 7);
      if (a.values != b.values) throw Error("selftest: sampler determinism");
      const double dt_star = brownian_dt_threshold(3.0, 2.0, 0.0);
      if (std::abs(dt_star - 4.0 / 9.0) > 1e-15) throw Error("selftest: brownian threshold");
      std::cout << "selftest: ok\n";
      return 0;
    }
    std::cerr << "no subcommand dispatched\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
