#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "asdflow/multiflow.hpp"

namespace asdflow {

using Json = nlohmann::json;

/// Current problem-file schema version.
inline constexpr int kSchemaVersion = 1;

Json load_json_file(const std::string& path);

/// Strict object validation: every present key must be known, every required
/// key present; violations raise ParseError naming `loc.key`.
void check_object(const Json& j, const std::string& loc,
                  const std::vector<std::string>& required,
                  const std::vector<std::string>& optional);

double parse_number(const Json& j, const std::string& loc);
long parse_integer(const Json& j, const std::string& loc);
Vector parse_vector(const Json& j, const std::string& loc);
LinearMap parse_matrix(const Json& j, const std::string& loc);

/// Tagged convex-function tree mirroring the catalog node kinds.
ConvexFunction parse_convex_function(const Json& j, const std::string& loc);

/// {"kind": "basic"|"swap"|"regularized", "phi": <node>, "lambda": <real>?}.
LagrangianSpec parse_lagrangian(const Json& j, const std::string& loc);

/// Optional "options" object of the parent document.
SolveOptions parse_solve_options(const Json& doc, const std::string& loc);

/// Validates doc.version == kSchemaVersion and doc.kind == expected.
void check_header(const Json& doc, const std::string& expected_kind);

Json report_to_json(const SolveReport& report);
Json report_to_json(const MultiflowReport& report);
Json report_to_json(const EstimateReport& report);

}  // namespace asdflow
