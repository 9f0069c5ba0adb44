#include "ratecert/serialize.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace ratecert {

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string exponent_key(const std::vector<std::string>& vars, const Exponent& e) {
  std::string s;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (e[i] == 0) continue;
    if (!s.empty()) s += '*';
    s += vars[i];
    if (e[i] > 1) s += '^' + std::to_string(e[i]);
  }
  return s.empty() ? "1" : s;
}

}  // namespace

json to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

json to_json(const SymMatrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.dim(); ++i) {
    json r = json::array();
    for (Index j = 0; j < m.dim(); ++j) r.push_back(number(m(i, j)));
    rows.push_back(std::move(r));
  }
  return rows;
}

json to_json(const FunctionClass& fc) {
  return {{"m_f", fc.m_f()}, {"L_f", fc.L_f()}, {"kappa", fc.condition_number()}};
}

json to_json(const AlgorithmFamily& family) {
  json params = json::array();
  for (std::size_t i = 0; i < family.param_names().size(); ++i)
    params.push_back({{"name", family.param_names()[i]},
                      {"unit", family.param_units()[i] == ParamUnit::inverse_curvature ? "inverse_curvature"
                                                                                     : "dimensionless"}});
  auto mat = [](const PolyArray& a) {
    json rows = json::array();
    for (Index i = 0; i < a.rows(); ++i) {
      json r = json::array();
      for (Index j = 0; j < a.cols(); ++j) r.push_back(a(i, j).to_string());
      rows.push_back(std::move(r));
    }
    return rows;
  };
  const auto& s = family.symbolic();
  return {{"name", family.name()},
          {"description", family.description()},
          {"parameters", params},
          {"state_dim", family.state_dim()},
          {"A", mat(s.A)},
          {"B", mat(s.B)},
          {"C", mat(s.C)},
          {"E", mat(s.E)}};
}

json to_json(const Certificate& c) {
  return {{"rho", number(c.rho)}, {"P", to_json(c.P)}, {"lambda", number(c.lambda)}, {"margin", number(c.margin)}};
}

json to_json(const VerificationReport& r) {
  return {{"passed", r.passed},
          {"numeric_ok", r.numeric_ok},
          {"max_eigenvalue", number(r.max_eigenvalue)},
          {"empirical_ok", r.empirical_ok},
          {"trials", r.trials},
          {"worst_decrease_violation", number(r.worst_decrease_violation)},
          {"worst_bound_violation", number(r.worst_bound_violation)},
          {"detail", r.detail}};
}

json to_json(const SosCertificate& c) {
  json basis = json::array();
  for (const auto& e : c.basis.monomials()) basis.push_back(exponent_key(c.basis.vars(), e));
  return {{"basis", basis}, {"rows", c.rows}, {"gram", to_json(c.gram)}, {"residual", number(c.residual)}};
}

json to_json(const Moments& m) {
  json out = json::object();
  for (const auto& [e, v] : m.values) out[exponent_key(m.vars, e)] = number(v);
  return out;
}

json to_json(const LowerBoundResult& r) {
  json mult = json::array(), mmult = json::array();
  for (const auto& c : r.multipliers) mult.push_back(to_json(c));
  for (const auto& c : r.matrix_multipliers) mmult.push_back(to_json(c));
  json cand = nullptr;
  if (r.moment_candidate) {
    cand = json::object();
    for (const auto& [k, v] : *r.moment_candidate) cand[k] = number(v);
  }
  return {{"gamma", number(r.gamma)},
          {"order", r.order},
          {"vars", r.vars},
          {"bound_source", r.bound_source},
          {"residual", number(r.residual)},
          {"iterations", r.iterations},
          {"moment_candidate", cand},
          {"s0", to_json(r.s0)},
          {"multipliers", mult},
          {"matrix_multipliers", mmult},
          {"moments", to_json(r.moments)}};
}

json theta_json(const AlgorithmFamily& family, const Vector& theta) {
  json out = json::object();
  for (std::size_t i = 0; i < family.param_names().size(); ++i)
    out[family.param_names()[i]] = number(theta(static_cast<Index>(i)));
  return out;
}

json analysis_document(const CertificateProblem& prob, const Vector& theta, const AnalysisResult& r) {
  json trace = json::array();
  for (const auto& s : r.bisection_trace)
    trace.push_back({{"rho2", s.rho2}, {"feasible", s.feasible}, {"margin", number(s.margin)}});
  json doc = {{"kind", "analysis"},
              {"family", prob.family.name()},
              {"function_class", to_json(prob.fc)},
              {"theta", theta_json(prob.family, theta)},
              {"rho", number(r.rho_star)},
              {"certificate", to_json(r.certificate)},
              {"iterations", r.iterations},
              {"bisection_trace", trace}};
  doc["verification"] = r.verification ? to_json(*r.verification) : json(nullptr);
  return doc;
}

json design_document(const DesignSpec& spec, const DesignResult& r) {
  json box = json::object();
  for (std::size_t i = 0; i < spec.box.size(); ++i)
    box[spec.family.param_names()[i]] = {spec.box[i].first, spec.box[i].second};
  json frozen = json::object();
  for (const auto& [k, v] : spec.frozen) frozen[k] = v;
  json doc = {{"kind", "design"},
              {"family", spec.family.name()},
              {"function_class", to_json(spec.fc)},
              {"method", r.method},
              {"theta_box", box},
              {"frozen", frozen},
              {"theta_star", theta_json(spec.family, r.theta_star)},
              {"rho_certified", number(r.rho_certified)},
              {"rho_lower_bound", r.rho_lower_bound ? number(*r.rho_lower_bound) : json(nullptr)},
              {"gap", r.gap ? number(*r.gap) : json(nullptr)},
              {"candidate_source", r.candidate_source.empty() ? json(nullptr) : json(r.candidate_source)},
              {"theta_candidate",
               r.theta_candidate ? theta_json(spec.family, *r.theta_candidate) : json(nullptr)},
              {"rho_candidate", r.rho_candidate ? number(*r.rho_candidate) : json(nullptr)},
              {"analysis", analysis_document(CertificateProblem(spec.family, spec.fc), r.theta_star, r.analysis)},
              {"grid_points", r.sweep_table ? json(r.sweep_table->size()) : json(nullptr)}};
  doc["relaxation"] = r.relaxation ? to_json(*r.relaxation) : json(nullptr);
  return doc;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_sweep_csv(std::ostream& out, const AlgorithmFamily& family, const std::vector<SweepRow>& rows) {
  for (const auto& n : family.param_names()) out << csv_field(n) << ',';
  out << "rho,feasible,status\r\n";
  for (const auto& r : rows) {
    for (Index i = 0; i < r.theta.size(); ++i) out << shortest(r.theta(i)) << ',';
    out << (r.status == "certified" ? shortest(r.rho) : std::string()) << ',' << (r.feasible ? "true" : "false")
        << ',' << csv_field(r.status) << "\r\n";
  }
}

}  // namespace ratecert
