// Command-line front end: periodic Riccati/Lyapunov solves, dichotomy
// verification, periodic extremals, finite-horizon solves, and the
// turnpike/decay diagnostics, plus a scenario runner and a self-test.
//
// Exit codes: 0 success, 1 check failure, 2 configuration error,
// 3 numerical failure.

#include <CLI11.hpp>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plq/dichotomy.hpp"
#include "plq/errors.hpp"
#include "plq/extremal.hpp"
#include "plq/horizon.hpp"
#include "plq/lyapunov.hpp"
#include "plq/problem.hpp"
#include "plq/problem_io.hpp"
#include "plq/report.hpp"
#include "plq/riccati.hpp"
#include "plq/scenario.hpp"

namespace {

struct CommonArgs {
  std::string problem;
  std::string out_dir = ".";
  int grid = 2048;
  double tol = 1e-10;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_problem = true) {
  auto* opt = cmd->add_option("--problem", args.problem,
                              "problem JSON file or builtin name "
                              "(paper-2d, scalar-a0, scalar-c3)");
  if (needs_problem) opt->required();
  cmd->add_option("--grid", args.grid, "integration steps per period")->default_val(2048);
  cmd->add_option("--tol", args.tol, "solver tolerance")->default_val(1e-10);
  cmd->add_option("--out-dir", args.out_dir, "output directory")->default_val(".");
}

std::string joined(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

Eigen::VectorXd parse_vector(const std::string& csv, int expected, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    vals.push_back(std::strtod(tok.c_str(), nullptr));
  }
  if (static_cast<int>(vals.size()) != expected)
    throw plq::ConfigError(what + ": expected " + std::to_string(expected) +
                           " comma-separated values, got " + std::to_string(vals.size()));
  Eigen::VectorXd v(expected);
  for (int i = 0; i < expected; ++i) v(i) = vals[static_cast<size_t>(i)];
  return v;
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    vals.push_back(std::strtod(tok.c_str(), nullptr));
  }
  return vals;
}

void write_json(const nlohmann::json& j, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw plq::Error("cannot open '" + file + "' for writing");
  out << j.dump(2) << "\n";
}

std::string sidecar_name(const std::string& csv_name) {
  std::filesystem::path p(csv_name);
  p.replace_extension(".diag.json");
  return p.string();
}

struct Pipeline {
  plq::PeriodicProblem problem;
  plq::RiccatiSolution ric;
  plq::LyapunovSolution lya;
  plq::DichotomyTransform xf;
};

Pipeline build_pipeline(const CommonArgs& args,
                        plq::LyapunovMethod method = plq::LyapunovMethod::Stein) {
  plq::PeriodicProblem problem = plq::resolve_problem(args.problem);
  plq::RiccatiOptions ropts;
  ropts.steps_per_period = args.grid;
  ropts.tol = args.tol;
  plq::RiccatiSolution ric = plq::solve_prde_periodic(problem, ropts);
  plq::LyapunovSolution lya = plq::solve_plde(problem, ric, method);
  plq::DichotomyTransform xf(problem, ric, lya);
  return Pipeline{std::move(problem), std::move(ric), std::move(lya), std::move(xf)};
}

int run_cli(int argc, char** argv) {
  CLI::App app{"periodic linear-quadratic optimal control via dichotomy decoupling"};
  app.require_subcommand(1);

  // ---- solve-riccati ----
  CommonArgs ric_args;
  double ric_seed_scale = 1.0;
  std::string ric_out = "P.csv";
  auto* ric_cmd = app.add_subcommand("solve-riccati", "stabilizing periodic Riccati solution");
  add_common(ric_cmd, ric_args);
  ric_cmd->add_option("--seed-scale", ric_seed_scale, "terminal seed = scale * I")->default_val(1.0);
  ric_cmd->add_option("--out", ric_out, "output CSV")->default_val("P.csv");

  // ---- solve-lyapunov ----
  CommonArgs lya_args;
  std::string lya_method = "stein";
  std::string lya_out = "E.csv";
  auto* lya_cmd = app.add_subcommand("solve-lyapunov", "periodic Lyapunov solution");
  add_common(lya_cmd, lya_args);
  lya_cmd->add_option("--method", lya_method, "truncated | stein")
      ->check(CLI::IsMember({"truncated", "stein"}))
      ->default_val("stein");
  lya_cmd->add_option("--out", lya_out, "output CSV")->default_val("E.csv");

  // ---- verify-dichotomy ----
  CommonArgs ver_args;
  auto* ver_cmd = app.add_subcommand("verify-dichotomy",
                                     "residual table for the decoupling transformation");
  add_common(ver_cmd, ver_args);

  // ---- periodic-extremal ----
  CommonArgs ext_args;
  std::string ext_prefix = "per_";
  auto* ext_cmd = app.add_subcommand("periodic-extremal", "closed-form periodic extremal");
  add_common(ext_cmd, ext_args);
  ext_cmd->add_option("--out-prefix", ext_prefix)->default_val("per_");

  // ---- finite-horizon ----
  CommonArgs fh_args;
  std::string fh_y0, fh_method = "dichotomy", fh_prefix = "lq_";
  double fh_T = 30.0;
  auto* fh_cmd = app.add_subcommand("finite-horizon", "finite-horizon tracking solve");
  add_common(fh_cmd, fh_args);
  fh_cmd->add_option("--y0", fh_y0, "initial state, comma separated")->required();
  fh_cmd->add_option("--T", fh_T, "horizon")->required();
  fh_cmd->add_option("--method", fh_method, "dichotomy | shooting")
      ->check(CLI::IsMember({"dichotomy", "shooting"}))
      ->default_val("dichotomy");
  fh_cmd->add_option("--out-prefix", fh_prefix)->default_val("lq_");

  // ---- turnpike ----
  CommonArgs tp_args;
  std::string tp_y0;
  double tp_T = 30.0;
  auto* tp_cmd = app.add_subcommand("turnpike", "distance to the periodic extremal + rate fit");
  add_common(tp_cmd, tp_args);
  tp_cmd->add_option("--y0", tp_y0)->required();
  tp_cmd->add_option("--T", tp_T)->required();

  // ---- avg-cost ----
  CommonArgs ac_args;
  std::string ac_y0, ac_horizons = "20,40,80";
  auto* ac_cmd = app.add_subcommand("avg-cost", "average-cost gap across horizons");
  add_common(ac_cmd, ac_args);
  ac_cmd->add_option("--y0", ac_y0, "initial state (default zeros)");
  ac_cmd->add_option("--horizons", ac_horizons)->default_val("20,40,80");

  // ---- stability-ratio ----
  CommonArgs sr_args;
  std::string sr_horizons = "5,10,20,40";
  int sr_samples = 16;
  auto* sr_cmd = app.add_subcommand("stability-ratio",
                                    "boundary-to-interior amplification across horizons");
  add_common(sr_cmd, sr_args);
  sr_cmd->add_option("--horizons", sr_horizons)->default_val("5,10,20,40");
  sr_cmd->add_option("--samples", sr_samples)->default_val(16);

  // ---- cauchy ----
  CommonArgs cy_args;
  std::string cy_y0, cy_lam0;
  double cy_T = 0.0;
  auto* cy_cmd = app.add_subcommand("cauchy", "initial-value solve through the decoupling");
  add_common(cy_cmd, cy_args);
  cy_cmd->add_option("--y0", cy_y0)->required();
  cy_cmd->add_option("--lam0", cy_lam0)->required();
  cy_cmd->add_option("--T", cy_T, "horizon (default one period)");

  // ---- riccati-decay ----
  CommonArgs rd_args;
  double rd_seed_scale = 10.0, rd_T = 0.0;
  int rd_periods = 5;
  auto* rd_cmd = app.add_subcommand("riccati-decay",
                                    "convergence rate of the terminal solve to the periodic orbit");
  add_common(rd_cmd, rd_args);
  rd_cmd->add_option("--seed-scale", rd_seed_scale, "terminal value G = scale * I")->default_val(10.0);
  rd_cmd->add_option("--periods", rd_periods)->default_val(5);
  rd_cmd->add_option("--T", rd_T, "terminal time (default periods * theta)");

  // ---- run ----
  std::string scenario_file;
  std::string run_out_dir;
  int run_grid = 0;
  auto* run_cmd = app.add_subcommand("run", "execute a scenario file");
  run_cmd->add_option("--scenario", scenario_file, "scenario JSON")->required();
  run_cmd->add_option("--out-dir", run_out_dir, "override scenario output_dir");
  run_cmd->add_option("--grid", run_grid, "override scenario grid");

  // ---- self-test ----
  int st_grid = 512;
  auto* st_cmd = app.add_subcommand("self-test", "analytic-oracle suite");
  st_cmd->add_option("--grid", st_grid)->default_val(512);

  CLI11_PARSE(app, argc, argv);

  if (ric_cmd->parsed()) {
    plq::PeriodicProblem problem = plq::resolve_problem(ric_args.problem);
    plq::RiccatiOptions opts;
    opts.steps_per_period = ric_args.grid;
    opts.tol = ric_args.tol;
    opts.terminal_seed =
        ric_seed_scale * Eigen::MatrixXd::Identity(problem.n(), problem.n());
    plq::RiccatiSolution sol = plq::solve_prde_periodic(problem, opts);
    std::string csv = joined(ric_args.out_dir, ric_out);
    plq::emit_path_csv(sol.P, csv);
    nlohmann::json diag = {{"residual_sup", sol.residual_sup},
                           {"periodicity_gap", sol.periodicity_gap},
                           {"periods_to_converge", sol.periods_to_converge},
                           {"nu_hat", sol.decay.nu_hat ? *sol.decay.nu_hat : 0.0}};
    write_json(diag, joined(ric_args.out_dir, sidecar_name(ric_out)));
    std::cout << diag.dump(2) << "\n";
    return 0;
  }

  if (lya_cmd->parsed()) {
    auto pipe = build_pipeline(lya_args, lya_method == "truncated"
                                             ? plq::LyapunovMethod::TruncatedIntegral
                                             : plq::LyapunovMethod::Stein);
    std::string csv = joined(lya_args.out_dir, lya_out);
    plq::emit_path_csv(pipe.lya.E, csv);
    nlohmann::json diag = {{"method", lya_method},
                           {"residual_sup", pipe.lya.residual_sup},
                           {"periodicity_gap", pipe.lya.periodicity_gap},
                           {"truncation_horizon", pipe.lya.truncation_horizon}};
    write_json(diag, joined(lya_args.out_dir, sidecar_name(lya_out)));
    std::cout << diag.dump(2) << "\n";
    return 0;
  }

  if (ver_cmd->parsed()) {
    auto pipe = build_pipeline(ver_args);
    std::vector<plq::DiagnosticCheck> checks;
    checks.push_back(plq::make_check("inverse_identity",
                                     plq::inverse_identity_residual(pipe.xf), 1e-10));
    checks.push_back(plq::make_check("decoupling_residual",
                                     plq::decoupling_residual(pipe.xf), 1e-6));
    Eigen::VectorXd y0 = Eigen::VectorXd::LinSpaced(pipe.problem.n(), 0.3, 1.0);
    Eigen::VectorXd lam0 = Eigen::VectorXd::LinSpaced(pipe.problem.n(), -0.5, 0.4);
    checks.push_back(plq::make_check("propagation_equivalence",
                                     plq::propagation_equivalence(pipe.xf, y0, lam0), 1e-6));
    nlohmann::json out = {{"checks", plq::to_json(checks)}};
    std::cout << out.dump(2) << "\n";
    for (const auto& c : checks)
      if (!c.pass) return 1;
    return 0;
  }

  if (ext_cmd->parsed()) {
    auto pipe = build_pipeline(ext_args);
    plq::PeriodicExtremal ext = plq::periodic_extremal(pipe.xf);
    plq::emit_path_csv(ext.y, joined(ext_args.out_dir, ext_prefix + "y.csv"));
    plq::emit_path_csv(ext.lambda, joined(ext_args.out_dir, ext_prefix + "lambda.csv"));
    plq::emit_path_csv(ext.u, joined(ext_args.out_dir, ext_prefix + "u.csv"));
    auto res = plq::extremal_residual(ext, pipe.problem);
    nlohmann::json diag = {{"cost", ext.cost},
                           {"y_residual", res.y_residual},
                           {"lambda_residual", res.lambda_residual},
                           {"y_boundary_gap", res.y_boundary_gap},
                           {"lambda_boundary_gap", res.lambda_boundary_gap},
                           {"z_formula_deviation", plq::z_formula_deviation(pipe.xf, ext.z)},
                           {"q_formula_deviation", plq::q_formula_deviation(pipe.xf, ext.q)}};
    write_json(diag, joined(ext_args.out_dir, ext_prefix + "diagnostics.json"));
    std::cout << diag.dump(2) << "\n";
    return 0;
  }

  if (fh_cmd->parsed()) {
    plq::PeriodicProblem problem = plq::resolve_problem(fh_args.problem);
    Eigen::VectorXd y0 = parse_vector(fh_y0, problem.n(), "--y0");
    std::optional<plq::FiniteHorizonSolution> solved;
    nlohmann::json diag;
    if (fh_method == "shooting") {
      plq::ShootingOptions opts;
      opts.steps_per_period = fh_args.grid;
      solved = plq::solve_lq_shooting(problem, y0, fh_T, opts);
    } else {
      auto pipe = build_pipeline(fh_args);
      plq::PeriodicExtremal ext = plq::periodic_extremal(pipe.xf);
      solved = plq::solve_lq_dichotomy(pipe.xf, ext, y0, fh_T);
      diag["periodic_cost"] = ext.cost;
      diag["average_cost_estimate"] = (fh_T / problem.theta()) * ext.cost;
    }
    plq::FiniteHorizonSolution& sol = *solved;
    plq::emit_path_csv(sol.y, joined(fh_args.out_dir, fh_prefix + "y.csv"));
    plq::emit_path_csv(sol.lambda, joined(fh_args.out_dir, fh_prefix + "lambda.csv"));
    plq::emit_path_csv(sol.u, joined(fh_args.out_dir, fh_prefix + "u.csv"));
    diag["T"] = sol.T;
    diag["method"] = fh_method;
    diag["cost"] = sol.cost;
    diag["y0_residual"] = sol.y0_residual;
    diag["lambdaT_residual"] = sol.lambdaT_residual;
    write_json(diag, joined(fh_args.out_dir, fh_prefix + "diagnostics.json"));
    std::cout << diag.dump(2) << "\n";
    return 0;
  }

  if (tp_cmd->parsed()) {
    auto pipe = build_pipeline(tp_args);
    Eigen::VectorXd y0 = parse_vector(tp_y0, pipe.problem.n(), "--y0");
    plq::PeriodicExtremal ext = plq::periodic_extremal(pipe.xf);
    plq::FiniteHorizonSolution sol = plq::solve_lq_dichotomy(pipe.xf, ext, y0, tp_T);
    plq::TurnpikeReport report = plq::turnpike_report(sol, ext, pipe.problem.theta());
    std::string csv = joined(tp_args.out_dir, "turnpike_error.csv");
    plq::emit_series_csv(report.error_series, "t,e", csv);
    plq::emit_gnuplot_script({csv}, plq::PlotKind::ErrorDecay,
                             joined(tp_args.out_dir, "turnpike_error.gp"));
    nlohmann::json fit = {{"fitted_nu", report.fitted_nu},
                          {"fitted_c", report.fitted_c},
                          {"bound_satisfied", report.bound_satisfied},
                          {"degenerate", report.degenerate},
                          {"r_squared", report.fit.r_squared},
                          {"nu_hat", pipe.xf.decay().nu_hat ? *pipe.xf.decay().nu_hat : 0.0}};
    write_json(fit, joined(tp_args.out_dir, "turnpike_fit.json"));
    std::cout << fit.dump(2) << "\n";
    return report.bound_satisfied ? 0 : 1;
  }

  if (ac_cmd->parsed()) {
    auto pipe = build_pipeline(ac_args);
    Eigen::VectorXd y0 = ac_y0.empty() ? Eigen::VectorXd::Zero(pipe.problem.n()).eval()
                                       : parse_vector(ac_y0, pipe.problem.n(), "--y0");
    plq::PeriodicExtremal ext = plq::periodic_extremal(pipe.xf);
    auto gaps = plq::average_cost_gap(pipe.xf, ext, y0, parse_list(ac_horizons));
    nlohmann::json table = nlohmann::json::array();
    for (const auto& [T, gap] : gaps)
      table.push_back({{"T", T}, {"gap", gap}, {"gap_times_T", gap * T}});
    nlohmann::json out = {{"periodic_average", ext.cost / pipe.problem.theta()}, {"gaps", table}};
    write_json(out, joined(ac_args.out_dir, "avg_cost.json"));
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (sr_cmd->parsed()) {
    auto pipe = build_pipeline(sr_args);
    auto report = plq::stability_ratio(pipe.xf, sr_samples, parse_list(sr_horizons));
    nlohmann::json table = nlohmann::json::array();
    for (const auto& [T, ratio] : report.per_horizon)
      table.push_back({{"T", T}, {"max_ratio", ratio}});
    nlohmann::json out = {{"per_horizon", table}, {"overall_max", report.overall_max}};
    write_json(out, joined(sr_args.out_dir, "stability_ratio.json"));
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (cy_cmd->parsed()) {
    auto pipe = build_pipeline(cy_args);
    Eigen::VectorXd y0 = parse_vector(cy_y0, pipe.problem.n(), "--y0");
    Eigen::VectorXd lam0 = parse_vector(cy_lam0, pipe.problem.n(), "--lam0");
    double T = cy_T > 0.0 ? cy_T : pipe.problem.theta();
    auto [y_path, lam_path] = plq::cauchy_solve(pipe.xf, y0, lam0, T);
    plq::emit_path_csv(y_path, joined(cy_args.out_dir, "cauchy_y.csv"));
    plq::emit_path_csv(lam_path, joined(cy_args.out_dir, "cauchy_lambda.csv"));
    // Deviation from direct integration of the coupled system.
    int n = pipe.problem.n();
    Eigen::VectorXd z0(2 * n);
    z0.head(n) = y0;
    z0.tail(n) = lam0;
    plq::MatrixPath direct = plq::integrate_fixed(
        [&pipe](double t, const Eigen::MatrixXd& z) -> Eigen::MatrixXd {
          return pipe.xf.coupled_matrix(t) * z;
        },
        0.0, T, z0, y_path.size() - 1);
    double sup = 0.0;
    for (int i = 0; i < y_path.size(); ++i) {
      Eigen::VectorXd z = direct.sample(i).col(0);
      sup = std::max(sup, (y_path.sample(i).col(0) - z.head(n)).norm());
      sup = std::max(sup, (lam_path.sample(i).col(0) - z.tail(n)).norm());
    }
    nlohmann::json out = {{"T", T}, {"deviation_vs_direct", sup}};
    write_json(out, joined(cy_args.out_dir, "cauchy_diagnostics.json"));
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (rd_cmd->parsed()) {
    auto pipe = build_pipeline(rd_args);
    double T = rd_T > 0.0 ? rd_T : rd_periods * pipe.problem.theta();
    Eigen::MatrixXd g =
        rd_seed_scale * Eigen::MatrixXd::Identity(pipe.problem.n(), pipe.problem.n());
    plq::DecayReport report = plq::riccati_decay_report(pipe.problem, pipe.ric, g, T, rd_periods);
    std::string csv = joined(rd_args.out_dir, "riccati_decay.csv");
    plq::emit_series_csv(report.series, "span,error", csv);
    plq::emit_gnuplot_script({csv}, plq::PlotKind::ErrorDecay,
                             joined(rd_args.out_dir, "riccati_decay.gp"));
    nlohmann::json out = {{"fitted_rate", report.fitted_rate},
                          {"two_nu_hat", report.two_nu_hat},
                          {"at_fixed_point", report.at_fixed_point},
                          {"r_squared", report.fit.r_squared}};
    write_json(out, joined(rd_args.out_dir, "riccati_decay_fit.json"));
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (run_cmd->parsed()) {
    plq::Scenario scenario = plq::load_scenario_file(scenario_file);
    if (!run_out_dir.empty()) scenario.output_dir = run_out_dir;
    if (run_grid > 0) scenario.grid = run_grid;
    plq::ScenarioResult result = plq::run_scenario(scenario);
    std::cout << result.summary.dump(2) << "\n";
    return result.exit_code();
  }

  if (st_cmd->parsed()) {
    plq::SelfTestOptions opts;
    opts.grid = st_grid;
    plq::SelfTestResult result = plq::self_test(opts);
    return result.all_pass ? 0 : 1;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const plq::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const plq::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
