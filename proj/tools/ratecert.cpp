// Command-line front end: analyze | design | sweep | table | simulate.

#include "ratecert/serialize.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

using namespace ratecert;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNeverFeasible = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string spec_path;
  std::string output;
  std::string csv;
  std::string family;
  std::string theta;
  std::string box;
  std::string freeze;
  std::string method;
  std::string scalarization;
  std::string function = "quadratic";
  std::vector<double> kappa;
  std::optional<double> m_f, L_f, eps;
  std::optional<int> resolution, order;
  std::optional<unsigned> threads;
  std::uint64_t seed = 1;
  int steps = 200;
  int dim = 3;
  bool certify = false;
  bool no_verify = false;
};

std::vector<std::pair<std::string, std::string>> split_assignments(const std::string& s) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("expected name=value, got '" + item + "'");
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw UsageError("not a number: '" + s + "'");
  return v;
}

// Spec file values with command-line overrides applied.
struct Problem {
  std::string family;
  double m_f = 1.0, L_f = 1.0;
  json theta = json::object();
  json box = json::object();
  json frozen = json::object();
  json options = json::object();
};

Problem load_problem(const RunConfig& cfg) {
  Problem p;
  if (!cfg.spec_path.empty()) {
    std::ifstream in(cfg.spec_path);
    if (!in) throw UsageError("cannot open spec file '" + cfg.spec_path + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("malformed spec file: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw UsageError("spec file must hold a JSON object");
    try {
      p.family = doc.value("family", "");
      p.m_f = doc.value("m_f", 1.0);
      p.L_f = doc.value("L_f", 1.0);
      if (doc.contains("kappa")) {
        p.m_f = 1.0;
        p.L_f = doc.at("kappa").get<double>();
      }
      if (doc.contains("theta")) p.theta = doc.at("theta");
      if (doc.contains("theta_box")) p.box = doc.at("theta_box");
      if (doc.contains("options")) p.options = doc.at("options");
      if (p.options.contains("frozen")) p.frozen = p.options.at("frozen");
    } catch (const json::exception& e) {
      throw UsageError("malformed spec file: " + std::string(e.what()));
    }
  }
  if (!cfg.family.empty()) p.family = cfg.family;
  if (!cfg.kappa.empty()) {
    if (cfg.kappa.size() != 1) throw UsageError("--kappa takes one value for this command");
    if (!(cfg.kappa[0] >= 1.0)) throw UsageError("--kappa must be >= 1");
    p.m_f = 1.0;
    p.L_f = cfg.kappa[0];
  }
  if (cfg.m_f) p.m_f = *cfg.m_f;
  if (cfg.L_f) p.L_f = *cfg.L_f;
  for (const auto& [k, v] : split_assignments(cfg.theta)) p.theta[k] = to_double(v);
  for (const auto& [k, v] : split_assignments(cfg.freeze)) p.frozen[k] = to_double(v);
  for (const auto& [k, v] : split_assignments(cfg.box)) {
    const auto colon = v.find(':');
    if (colon == std::string::npos) throw UsageError("box entries are name=lo:hi, got '" + k + "=" + v + "'");
    p.box[k] = {to_double(v.substr(0, colon)), to_double(v.substr(colon + 1))};
  }
  if (p.family.empty()) throw UsageError("no family given (--family or spec file)");
  return p;
}

Vector theta_of(const AlgorithmFamily& fam, const json& theta) {
  Point pt;
  for (const auto& [k, v] : theta.items()) {
    if (!v.is_number()) throw UsageError("theta value for '" + k + "' is not a number");
    pt[k] = v.get<double>();
  }
  return fam.theta_from(pt);
}

void emit(const RunConfig& cfg, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  if (cfg.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + cfg.output + "'");
  out << text;
}

AnalysisOptions analysis_options(const RunConfig& cfg, const Problem& p) {
  AnalysisOptions ao;
  if (p.options.contains("eps")) ao.eps = p.options.at("eps").get<double>();
  if (cfg.eps) ao.eps = *cfg.eps;
  return ao;
}

int cmd_analyze(const RunConfig& cfg) {
  const Problem p = load_problem(cfg);
  if (p.theta.empty()) throw UsageError("analyze needs --theta (or theta in the spec file)");
  const CertificateProblem prob(builtin_family(p.family), FunctionClass(p.m_f, p.L_f));
  const Vector theta = theta_of(prob.family, p.theta);
  AnalysisResult r = certify_rate(prob, theta, analysis_options(cfg, p));
  if (!cfg.no_verify) r.verification = verify_certificate(prob, theta, r.certificate, 20, cfg.seed);
  emit(cfg, analysis_document(prob, theta, r));
  return kExitOk;
}

DesignSpec design_spec(const Problem& p, const RunConfig& cfg) {
  DesignSpec spec(builtin_family(p.family), FunctionClass(p.m_f, p.L_f));
  const auto& names = spec.family.param_names();
  for (const auto& [k, v] : p.box.items()) {
    const auto it = std::find(names.begin(), names.end(), k);
    if (it == names.end()) throw UsageError("unknown parameter '" + k + "' in box");
    if (!v.is_array() || v.size() != 2) throw UsageError("box for '" + k + "' must be [lo, hi]");
    spec.box[static_cast<std::size_t>(it - names.begin())] = {v[0].get<double>(), v[1].get<double>()};
  }
  for (const auto& [k, v] : p.frozen.items()) spec.frozen[k] = v.get<double>();
  std::string method = p.options.value("method", "grid");
  if (!cfg.method.empty()) method = cfg.method;
  spec.method = design_method_from(method);
  spec.validate();
  return spec;
}

DesignOptions design_options(const RunConfig& cfg, const Problem& p) {
  DesignOptions o;
  o.analysis = analysis_options(cfg, p);
  o.resolution = p.options.value("resolution", o.resolution);
  o.order = p.options.value("order", o.order);
  if (p.options.contains("scalarization"))
    o.scalarization = scalarization_from(p.options.at("scalarization").get<std::string>());
  if (cfg.resolution) o.resolution = *cfg.resolution;
  if (cfg.order) o.order = *cfg.order;
  if (cfg.threads) o.threads = *cfg.threads;
  if (!cfg.scalarization.empty()) o.scalarization = scalarization_from(cfg.scalarization);
  o.seed = cfg.seed;
  return o;
}

void write_csv(const std::string& path, const DesignSpec& spec, const DesignResult& r) {
  if (!r.sweep_table) return;
  if (path.empty() || path == "-") {
    write_sweep_csv(std::cout, spec.family, *r.sweep_table);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_sweep_csv(out, spec.family, *r.sweep_table);
}

int cmd_design(const RunConfig& cfg) {
  const Problem p = load_problem(cfg);
  const DesignSpec spec = design_spec(p, cfg);
  const DesignResult r = design(spec, design_options(cfg, p));
  // The sweep goes next to the JSON unless a CSV path was given.
  std::string csv = cfg.csv;
  if (csv.empty() && !cfg.output.empty()) {
    csv = cfg.output;
    if (csv.size() > 5 && csv.ends_with(".json")) csv.resize(csv.size() - 5);
    csv += ".csv";
  }
  if (!csv.empty()) write_csv(csv, spec, r);
  emit(cfg, design_document(spec, r));
  std::fprintf(stderr, "theta* =");
  for (Index i = 0; i < r.theta_star.size(); ++i)
    std::fprintf(stderr, " %s=%.6g", spec.family.param_names()[static_cast<std::size_t>(i)].c_str(), r.theta_star(i));
  std::fprintf(stderr, "  rho_certified = %.6f", r.rho_certified);
  if (r.rho_lower_bound) std::fprintf(stderr, "  rho_lower_bound = %.6f", *r.rho_lower_bound);
  std::fprintf(stderr, "\n");
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.method = "grid";
  const Problem p = load_problem(c);
  const DesignSpec spec = design_spec(p, c);
  const DesignResult r = design_grid(spec, design_options(c, p));
  write_csv(c.output, spec, r);
  return kExitOk;
}

struct TableRow {
  std::string method;
  std::string family;
  Vector theta;
  double analytic;
  bool reference;  // quadratics-only: printed, not certified
};

std::vector<TableRow> table_rows(double kappa) {
  const double m = 1.0, L = kappa, sk = std::sqrt(kappa), q = std::sqrt(3.0 * kappa + 1.0);
  Vector g1(1), g2(1), n1(2), n2(2), hb(2);
  g1 << 1.0 / L;
  g2 << 2.0 / (m + L);
  n1 << 1.0 / L, (sk - 1.0) / (sk + 1.0);
  n2 << 4.0 / (3.0 * L + m), (q - 2.0) / (q + 2.0);
  hb << 4.0 / std::pow(std::sqrt(L) + std::sqrt(m), 2), std::pow((sk - 1.0) / (sk + 1.0), 2);
  return {{"gradient h=1/L", "gradient", g1, 1.0 - 1.0 / kappa, false},
          {"gradient h=2/(m+L)", "gradient", g2, (kappa - 1.0) / (kappa + 1.0), false},
          {"nesterov (strongly convex)", "nesterov", n1, std::sqrt(1.0 - 1.0 / sk), false},
          {"nesterov (quadratics)", "nesterov", n2, 1.0 - 2.0 / q, true},
          {"heavy-ball (quadratics)", "heavy_ball", hb, (sk - 1.0) / (sk + 1.0), true}};
}

int cmd_table(const RunConfig& cfg) {
  std::vector<double> kappas = cfg.kappa;
  if (kappas.empty()) kappas = {1.0, 2.0, 5.0, 10.0, 100.0};
  AnalysisOptions ao;
  if (cfg.eps) ao.eps = *cfg.eps;
  json rows = json::array();
  std::printf("%8s  %-28s %10s %10s %11s  %s\n", "kappa", "row", "analytic", "certified", "difference", "status");
  for (const double k : kappas) {
    if (!(k >= 1.0)) throw UsageError("--kappa values must be >= 1");
    for (const auto& row : table_rows(k)) {
      const CertificateProblem prob(builtin_family(row.family), FunctionClass(1.0, k));
      json j = {{"kappa", k},
                {"row", row.method},
                {"family", row.family},
                {"theta", theta_json(prob.family, row.theta)},
                {"analytic", row.analytic}};
      std::string status = "certified";
      std::optional<double> rho;
      if (row.reference) {
        status = "analytic-reference";
      } else {
        try {
          const AnalysisResult r = certify_rate(prob, row.theta, ao);
          rho = r.rho_star;
          j["verified"] = verify_certificate(prob, row.theta, r.certificate, 20, cfg.seed).passed;
        } catch (const NeverFeasible&) {
          status = "never_feasible";
        }
      }
      j["certified"] = rho ? json(*rho) : json(nullptr);
      j["difference"] = rho ? json(*rho - row.analytic) : json(nullptr);
      j["status"] = status;
      if (rho)
        std::printf("%8g  %-28s %10.6f %10.6f %+11.2e  %s\n", k, row.method.c_str(), row.analytic, *rho,
                    *rho - row.analytic, status.c_str());
      else
        std::printf("%8g  %-28s %10.6f %10s %11s  %s\n", k, row.method.c_str(), row.analytic, "-", "-",
                    status.c_str());
      rows.push_back(std::move(j));
    }
  }
  if (!cfg.output.empty()) emit(cfg, json{{"kind", "table"}, {"rows", rows}});
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg) {
  const Problem p = load_problem(cfg);
  if (p.theta.empty()) throw UsageError("simulate needs --theta (or theta in the spec file)");
  if (cfg.steps < 1 || cfg.dim < 1) throw UsageError("--steps and --dim must be >= 1");
  const CertificateProblem prob(builtin_family(p.family), FunctionClass(p.m_f, p.L_f));
  const Vector theta = theta_of(prob.family, p.theta);

  std::mt19937_64 rng(cfg.seed);
  std::unique_ptr<TestFunction> f;
  if (cfg.function == "quadratic")
    f = std::make_unique<QuadraticFunction>(QuadraticFunction::random(prob.fc, cfg.dim, rng));
  else if (cfg.function == "logsumexp")
    f = std::make_unique<LogSumExpFunction>(LogSumExpFunction::random(prob.fc, cfg.dim, 2 * cfg.dim + 1, rng));
  else
    throw UsageError("--function must be quadratic or logsumexp");
  std::normal_distribution<double> normal;
  Matrix xi0(prob.n(), cfg.dim);
  for (Index i = 0; i < xi0.rows(); ++i)
    for (Index j = 0; j < xi0.cols(); ++j) xi0(i, j) = normal(rng);

  const Trajectory traj = simulate(prob.family, theta, *f, xi0, cfg.steps);
  json doc = {{"kind", "simulate"},
              {"family", prob.family.name()},
              {"function_class", to_json(prob.fc)},
              {"theta", theta_json(prob.family, theta)},
              {"function", cfg.function},
              {"dim", cfg.dim},
              {"steps", cfg.steps},
              {"seed", cfg.seed},
              {"objective_gaps", traj.objective_gaps}};
  doc["rho"] = nullptr;
  doc["lyapunov"] = nullptr;
  if (cfg.certify) {
    const AnalysisResult r = certify_rate(prob, theta, analysis_options(cfg, p));
    const auto v =
        lyapunov_values(traj, r.certificate.P, fixed_point_state(prob.family, theta, f->minimizer()));
    doc["rho"] = r.rho_star;
    doc["lyapunov"] = v;
  }
  emit(cfg, doc);
  return kExitOk;
}

void common_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--spec", cfg.spec_path, "JSON spec file {family, theta | theta_box, m_f, L_f, options}");
  sub->add_option("--family", cfg.family, "gradient | heavy_ball | nesterov | general_three_param");
  sub->add_option("--kappa", cfg.kappa, "condition number; sets (m_f, L_f) = (1, kappa)")->delimiter(',');
  sub->add_option("--m_f,--m-f", cfg.m_f, "strong convexity parameter");
  sub->add_option("--L_f,--L-f", cfg.L_f, "smoothness parameter");
  sub->add_option("--eps", cfg.eps, "bisection tolerance on rho^2");
  sub->add_option("--seed", cfg.seed, "seed for verification and simulation");
  sub->add_option("-o,--output", cfg.output, "output path (default: standard output)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certify and design convergence rates of first-order methods"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto* analyze = app.add_subcommand("analyze", "certify the rate of a tuned method (JSON)");
  common_options(analyze, cfg);
  analyze->add_option("--theta", cfg.theta, "parameters, e.g. h=0.1,beta=0.5");
  analyze->add_flag("--no-verify", cfg.no_verify, "skip the empirical verification report");

  auto* design_cmd = app.add_subcommand("design", "tune parameters over a box (JSON, optional CSV)");
  auto* sweep = app.add_subcommand("sweep", "grid sweep only, CSV output");
  for (auto* sub : {design_cmd, sweep}) {
    common_options(sub, cfg);
    sub->add_option("--box", cfg.box, "parameter box, e.g. h=0:0.2,beta=0:1");
    sub->add_option("--freeze", cfg.freeze, "pinned parameters, e.g. h=0.1");
    sub->add_option("--resolution", cfg.resolution, "grid points per free parameter");
    sub->add_option("--threads", cfg.threads, "worker threads for the grid (0: all cores)");
  }
  design_cmd->add_option("--method", cfg.method, "grid | sos | both");
  design_cmd->add_option("--scalarization", cfg.scalarization, "matrix | trace_det | minors");
  design_cmd->add_option("--order", cfg.order, "relaxation order");
  design_cmd->add_option("--csv", cfg.csv, "sweep table path ('-' for standard output; default: output path with .csv)");

  auto* table = app.add_subcommand("table", "certify standard tunings against their analytical rates");
  table->add_option("--kappa", cfg.kappa, "condition numbers, e.g. 1,10,100")->delimiter(',');
  table->add_option("--eps", cfg.eps, "bisection tolerance on rho^2");
  table->add_option("--seed", cfg.seed, "seed for verification");
  table->add_option("-o,--output", cfg.output, "also write the report as JSON");

  auto* sim = app.add_subcommand("simulate", "run a method on a random member of the class (JSON)");
  common_options(sim, cfg);
  sim->add_option("--theta", cfg.theta, "parameters, e.g. h=0.1");
  sim->add_option("--steps", cfg.steps, "iterations");
  sim->add_option("--dim", cfg.dim, "problem dimension");
  sim->add_option("--function", cfg.function, "quadratic | logsumexp");
  sim->add_flag("--certify", cfg.certify, "also certify the rate and report Lyapunov values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  CLI::App* used = app.get_subcommands().front();
  try {
    if (used == analyze) return cmd_analyze(cfg);
    if (used == design_cmd) return cmd_design(cfg);
    if (used == sweep) return cmd_sweep(cfg);
    if (used == table) return cmd_table(cfg);
    return cmd_simulate(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << used->help();
    return kExitError;
  } catch (const NeverFeasible& e) {
    std::cerr << "never feasible: " << e.what() << "\n";
    return kExitNeverFeasible;
  } catch (const AllInfeasible& e) {
    std::cerr << "never feasible: " << e.what() << "\n";
    return kExitNeverFeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
