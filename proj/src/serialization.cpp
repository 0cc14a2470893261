#include "asdflow/serialization.hpp"

#include <algorithm>
#include <fstream>

#include "asdflow/errors.hpp"

namespace asdflow {

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem file: " + path);
  Json doc;
  try {
    in >> doc;
  } catch (const Json::exception& e) {
    throw ParseError("problem file " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("problem file " + path + ": top level must be an object");
  return doc;
}

void check_object(const Json& j, const std::string& loc,
                  const std::vector<std::string>& required,
                  const std::vector<std::string>& optional) {
  if (!j.is_object()) throw ParseError(loc + ": expected an object");
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    if (std::find(required.begin(), required.end(), key) == required.end() &&
        std::find(optional.begin(), optional.end(), key) == optional.end())
      throw ParseError(loc + "." + key + ": unknown field");
  }
  for (const auto& key : required)
    if (!j.contains(key)) throw ParseError(loc + "." + key + ": missing required field");
}

double parse_number(const Json& j, const std::string& loc) {
  if (!j.is_number()) throw ParseError(loc + ": expected a number");
  return j.get<double>();
}

long parse_integer(const Json& j, const std::string& loc) {
  if (!j.is_number_integer()) throw ParseError(loc + ": expected an integer");
  return j.get<long>();
}

Vector parse_vector(const Json& j, const std::string& loc) {
  if (!j.is_array() || j.empty()) throw ParseError(loc + ": expected a nonempty array of numbers");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = parse_number(j[i], loc + "[" + std::to_string(i) + "]");
  return v;
}

LinearMap parse_matrix(const Json& j, const std::string& loc) {
  if (!j.is_array() || j.empty()) throw ParseError(loc + ": expected a row-major array of rows");
  size_t cols = 0;
  LinearMap m;
  for (size_t r = 0; r < j.size(); ++r) {
    std::string rloc = loc + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].empty()) throw ParseError(rloc + ": expected an array of numbers");
    if (r == 0) {
      cols = j[r].size();
      m.resize(j.size(), cols);
    } else if (j[r].size() != cols) {
      throw ParseError(rloc + ": ragged matrix rows");
    }
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_number(j[r][c], rloc + "[" + std::to_string(c) + "]");
  }
  return m;
}

ConvexFunction parse_convex_function(const Json& j, const std::string& loc) {
  if (!j.is_object() || !j.contains("type"))
    throw ParseError(loc + ".type: convex function node needs a type tag");
  if (!j["type"].is_string()) throw ParseError(loc + ".type: expected a string");
  std::string type = j["type"].get<std::string>();
  try {
    if (type == "quadratic") {
      check_object(j, loc, {"type", "q"}, {"b", "c"});
      LinearMap q = parse_matrix(j["q"], loc + ".q");
      Vector b = j.contains("b") ? parse_vector(j["b"], loc + ".b") : Vector(Vector::Zero(q.rows()));
      double c = j.contains("c") ? parse_number(j["c"], loc + ".c") : 0.0;
      return quadratic(std::move(q), std::move(b), c);
    }
    if (type == "norm_squared") {
      check_object(j, loc, {"type", "dim"}, {"alpha"});
      long dim = parse_integer(j["dim"], loc + ".dim");
      double alpha = j.contains("alpha") ? parse_number(j["alpha"], loc + ".alpha") : 1.0;
      return norm_squared(dim, alpha);
    }
    if (type == "abs_sum") {
      check_object(j, loc, {"type", "weights"}, {});
      return abs_sum(parse_vector(j["weights"], loc + ".weights"));
    }
    if (type == "indicator_box") {
      check_object(j, loc, {"type", "lo", "hi"}, {});
      return indicator_box(parse_vector(j["lo"], loc + ".lo"),
                           parse_vector(j["hi"], loc + ".hi"));
    }
    if (type == "linear_tilt") {
      check_object(j, loc, {"type", "base", "v"}, {});
      return linear_tilt(parse_convex_function(j["base"], loc + ".base"),
                         parse_vector(j["v"], loc + ".v"));
    }
    if (type == "separable_sum") {
      check_object(j, loc, {"type", "terms"}, {});
      if (!j["terms"].is_array() || j["terms"].empty())
        throw ParseError(loc + ".terms: expected a nonempty array");
      std::vector<std::pair<ConvexFunction, Eigen::Index>> terms;
      Eigen::Index offset = 0;
      for (size_t i = 0; i < j["terms"].size(); ++i) {
        ConvexFunction f = parse_convex_function(
            j["terms"][i], loc + ".terms[" + std::to_string(i) + "]");
        Eigen::Index d = f.dim();
        terms.emplace_back(std::move(f), offset);
        offset += d;
      }
      return separable_sum(std::move(terms));
    }
    if (type == "moreau_envelope") {
      check_object(j, loc, {"type", "base", "lambda"}, {});
      return moreau_envelope(parse_convex_function(j["base"], loc + ".base"),
                             parse_number(j["lambda"], loc + ".lambda"));
    }
    if (type == "sum_with_quadratic") {
      check_object(j, loc, {"type", "base", "a"}, {});
      return sum_with_quadratic(parse_convex_function(j["base"], loc + ".base"),
                                parse_matrix(j["a"], loc + ".a"));
    }
  } catch (const DimensionError& e) {
    throw ParseError(loc + ": " + e.what());
  } catch (const DomainError& e) {
    throw ParseError(loc + ": " + e.what());
  }
  throw ParseError(loc + ".type: unknown node type '" + type + "'");
}

LagrangianSpec parse_lagrangian(const Json& j, const std::string& loc) {
  check_object(j, loc, {"kind", "phi"}, {"lambda"});
  if (!j["kind"].is_string()) throw ParseError(loc + ".kind: expected a string");
  std::string kind = j["kind"].get<std::string>();
  ConvexFunction phi = parse_convex_function(j["phi"], loc + ".phi");
  if (kind == "basic") return build_basic_asd(std::move(phi));
  if (kind == "swap") {
    try {
      return build_swap_asd(std::move(phi));
    } catch (const DimensionError& e) {
      throw ParseError(loc + ".phi: " + e.what());
    }
  }
  if (kind == "regularized") {
    if (!j.contains("lambda"))
      throw ParseError(loc + ".lambda: missing required field for regularized kind");
    double lambda = parse_number(j["lambda"], loc + ".lambda");
    if (lambda <= 0) throw ParseError(loc + ".lambda: must be positive");
    return lambda_regularize(build_basic_asd(std::move(phi)), lambda);
  }
  throw ParseError(loc + ".kind: unknown Lagrangian kind '" + kind + "'");
}

SolveOptions parse_solve_options(const Json& doc, const std::string& loc) {
  SolveOptions opts;
  if (!doc.contains("options")) return opts;
  const Json& j = doc["options"];
  std::string oloc = loc + ".options";
  check_object(j, oloc, {}, {"max_iterations", "action_tol", "mu_init", "mu_min"});
  if (j.contains("max_iterations")) {
    opts.max_iterations = parse_integer(j["max_iterations"], oloc + ".max_iterations");
    if (opts.max_iterations < 1) throw ParseError(oloc + ".max_iterations: must be >= 1");
  }
  if (j.contains("action_tol")) opts.action_tol = parse_number(j["action_tol"], oloc + ".action_tol");
  if (j.contains("mu_init")) opts.mu_init = parse_number(j["mu_init"], oloc + ".mu_init");
  if (j.contains("mu_min")) opts.mu_min = parse_number(j["mu_min"], oloc + ".mu_min");
  if (opts.mu_init <= 0 || opts.mu_min <= 0 || opts.mu_min > opts.mu_init)
    throw ParseError(oloc + ": need 0 < mu_min <= mu_init");
  return opts;
}

void check_header(const Json& doc, const std::string& expected_kind) {
  if (!doc.contains("version")) throw ParseError("$.version: missing required field");
  long version = parse_integer(doc["version"], "$.version");
  if (version != kSchemaVersion)
    throw ParseError("$.version: unsupported schema version " + std::to_string(version) +
                     ", expected " + std::to_string(kSchemaVersion));
  if (!doc.contains("kind")) throw ParseError("$.kind: missing required field");
  if (!doc["kind"].is_string()) throw ParseError("$.kind: expected a string");
  std::string kind = doc["kind"].get<std::string>();
  if (kind != expected_kind)
    throw ParseError("$.kind: expected '" + expected_kind + "', found '" + kind + "'");
}

Json report_to_json(const SolveReport& report) {
  Json j;
  j["action_value"] = report.action_value;
  j["max_inclusion_residual"] = report.max_inclusion_residual;
  j["boundary_residuals"] = {report.boundary_residuals.first, report.boundary_residuals.second};
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  if (report.refinement_slope)
    j["refinement_slope"] = *report.refinement_slope;
  else
    j["refinement_slope"] = nullptr;
  j["saturated"] = report.saturated;
  return j;
}

Json report_to_json(const MultiflowReport& report) {
  Json j;
  j["action_value"] = report.action_value;
  j["max_inclusion_residual"] = report.max_inclusion_residual;
  j["boundary_residual"] = report.boundary_residual;
  j["converged"] = report.converged;
  j["lambda_gaps"] = report.lambda_gaps;
  j["p0"] = std::vector<double>(report.cert.p0.data(),
                                report.cert.p0.data() + report.cert.p0.size());
  j["p0_residual"] = report.cert.residual;
  return j;
}

Json report_to_json(const EstimateReport& report) {
  Json j;
  j["p0_norm"] = report.p0_norm;
  j["energy"] = report.energy;
  j["energy_bound"] = report.energy_bound;
  j["energy_ok"] = report.energy_ok;
  j["edge_max"] = report.edge_max;
  j["edge_bound"] = report.edge_bound;
  j["edge_ok"] = report.edge_ok;
  j["slack"] = report.slack;
  return j;
}

}  // namespace asdflow
