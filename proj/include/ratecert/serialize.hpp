#pragma once

#include "ratecert/design.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace ratecert {

using json = nlohmann::ordered_json;

json to_json(const Vector& v);
json to_json(const SymMatrix& m);
json to_json(const FunctionClass& fc);
json to_json(const AlgorithmFamily& family);
json to_json(const Certificate& c);
json to_json(const VerificationReport& r);
json to_json(const SosCertificate& c);
json to_json(const Moments& m);
json to_json(const LowerBoundResult& r);

/// Parameter values keyed by name.
json theta_json(const AlgorithmFamily& family, const Vector& theta);

/// Full documents, as written by the command-line tool.
json analysis_document(const CertificateProblem& prob, const Vector& theta, const AnalysisResult& r);
json design_document(const DesignSpec& spec, const DesignResult& r);

/// RFC 4180 CSV: one column per parameter, then rho, feasible, status.
void write_sweep_csv(std::ostream& out, const AlgorithmFamily& family, const std::vector<SweepRow>& rows);

/// RFC 4180 field quoting (only when needed).
std::string csv_field(const std::string& s);

}  // namespace ratecert
