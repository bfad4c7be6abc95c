#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sgdlab/bounds.hpp"
#include "sgdlab/incoherence.hpp"
#include "sgdlab/problem.hpp"
#include "sgdlab/sampling.hpp"

namespace sgdlab {

using json = nlohmann::json;

// %.17g round-trips doubles exactly; every CSV number goes through here.
inline std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// --- Problems ----------------------------------------------------------------

inline json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};  // data is row-major
}

inline Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data = j.at("data").get<std::vector<double>>();
  require(m.data.size() == m.rows * m.cols, "matrix: data size mismatch");
  return m;
}

inline json solution_set_to_json(const SolutionSetDescriptor& set) {
  return json{{"points", set.points}, {"approximate", set.approximate}};
}

inline SolutionSetDescriptor solution_set_from_json(const json& j) {
  SolutionSetDescriptor set;
  set.points = j.at("points").get<std::vector<Vector>>();
  set.approximate = j.value("approximate", false);
  require(!set.points.empty(), "solution set: empty point list");
  return set;
}

inline json problem_to_json(const FiniteSumProblem& problem) {
  json samples = json::array();
  for (const auto& s : problem.samples) {
    if (s.kind == SampleLossKind::Quadratic) {
      samples.push_back(json{{"kind", "quadratic"},
                             {"center", s.center},
                             {"curvature", matrix_to_json(s.curvature)},
                             {"offset", s.offset}});
    } else {
      samples.push_back(json{{"kind", "phase_retrieval"},
                             {"measurement", s.measurement},
                             {"observation", s.observation}});
    }
  }
  json sets = json::array();
  for (const auto& s : problem.per_sample_solution_sets) sets.push_back(solution_set_to_json(s));
  return json{{"dimension", problem.dimension},
              {"smoothness", problem.smoothness},
              {"mu", problem.mu},
              {"sample_min", problem.sample_min},
              {"total_min", problem.total_min},
              {"samples", samples},
              {"total_solution_set", solution_set_to_json(problem.total_solution_set)},
              {"per_sample_solution_sets", sets}};
}

inline FiniteSumProblem problem_from_json(const json& j) {
  FiniteSumProblem problem;
  problem.dimension = j.at("dimension").get<std::size_t>();
  problem.smoothness = j.at("smoothness").get<double>();
  problem.mu = j.at("mu").get<std::vector<double>>();
  problem.sample_min = j.at("sample_min").get<std::vector<double>>();
  problem.total_min = j.at("total_min").get<double>();
  problem.total_solution_set = solution_set_from_json(j.at("total_solution_set"));
  for (const auto& js : j.at("per_sample_solution_sets"))
    problem.per_sample_solution_sets.push_back(solution_set_from_json(js));

  for (const auto& js : j.at("samples")) {
    SampleLossSpec s;
    const std::string kind = js.at("kind").get<std::string>();
    if (kind == "quadratic") {
      s.kind = SampleLossKind::Quadratic;
      s.center = js.at("center").get<Vector>();
      s.curvature = matrix_from_json(js.at("curvature"));
      s.offset = js.value("offset", 0.0);
      require(s.center.size() == problem.dimension, "problem: sample center dimension mismatch");
      require(s.curvature.rows == problem.dimension && s.curvature.cols == problem.dimension,
              "problem: curvature shape mismatch");
    } else if (kind == "phase_retrieval") {
      s.kind = SampleLossKind::PhaseRetrieval;
      s.measurement = js.at("measurement").get<Vector>();
      s.observation = js.at("observation").get<double>();
      require(s.measurement.size() == problem.dimension, "problem: measurement dimension mismatch");
      require(s.observation >= 0.0, "problem: observation must be nonnegative");
    } else {
      throw std::invalid_argument("problem: unknown sample kind '" + kind + "'");
    }
    problem.samples.push_back(std::move(s));
  }

  const std::size_t n = problem.samples.size();
  require(n >= 1, "problem: need at least one sample");
  require(problem.mu.size() == n && problem.sample_min.size() == n &&
              problem.per_sample_solution_sets.size() == n,
          "problem: per-sample field lengths disagree");
  require(problem.smoothness > 0.0, "problem: smoothness must be positive");

  for (std::size_t i = 0; i < n; ++i) {
    require(problem.mu[i] >= 0.0 && problem.mu[i] <= problem.smoothness * (1.0 + 1e-12),
            "problem: mu out of [0, L]");
    const SampleLossSpec& s = problem.samples[i];
    if (s.kind == SampleLossKind::Quadratic) {
      require(is_symmetric(s.curvature), "problem: curvature matrix not symmetric");
      const Vector eig = symmetric_eigenvalues(s.curvature);
      require(eig.front() >= -1e-9 * std::max(1.0, std::abs(eig.back())),
              "problem: curvature matrix not positive semidefinite");
      require(eig.back() <= problem.smoothness * (1.0 + 1e-9),
              "problem: curvature eigenvalue exceeds smoothness");
      require(problem.mu[i] <= eig.front() + kMinTolerance,
              "problem: mu exceeds the smallest curvature eigenvalue");
    }
    // Declared minima must be attained on the declared sets (exact sets only).
    if (!problem.per_sample_solution_sets[i].approximate) {
      for (const Vector& p : problem.per_sample_solution_sets[i].points)
        require(std::abs(sample_loss(problem, i, p) - problem.sample_min[i]) <= kMinTolerance,
                "problem: declared per-sample minimum not attained on its solution set");
    }
  }
  if (!problem.total_solution_set.approximate) {
    for (const Vector& p : problem.total_solution_set.points)
      require(std::abs(total_loss(problem, p) - problem.total_min) <= kMinTolerance,
              "problem: declared total minimum not attained on the total solution set");
  }
  return problem;
}

inline void save_problem(const FiniteSumProblem& problem, const std::string& path) {
  write_text_file(path, problem_to_json(problem).dump(2) + "\n");
}

inline FiniteSumProblem load_problem(const std::string& path) {
  return problem_from_json(json::parse(read_text_file(path)));
}

// --- Profiles and reports -----------------------------------------------------

inline json profile_to_json(const IncoherenceProfile& profile) {
  json j{{"epsilon", profile.epsilon},
         {"epsilon_max", profile.epsilon_max},
         {"alpha", profile.alpha},
         {"mu_bar", profile.mu_bar},
         {"m_bar", profile.m_bar}};
  if (profile.m_tilde)
    j["m_tilde"] = *profile.m_tilde;
  else
    j["m_tilde"] = nullptr;
  return j;
}

inline json scheme_spec_to_json(const SchemeSpec& spec) {
  json j{{"scheme", scheme_name(spec.kind)}};
  if (!spec.sigma.empty()) j["sigma"] = spec.sigma;
  return j;
}

inline SchemeSpec scheme_spec_from_json(const json& j) {
  SchemeSpec spec;
  spec.kind = scheme_from_name(j.at("scheme").get<std::string>());
  if (j.contains("sigma") && !j.at("sigma").is_null())
    spec.sigma = j.at("sigma").get<std::vector<std::size_t>>();
  return spec;
}

inline json bound_report_to_json(const BoundReport& report) {
  return json{{"name", report.name},
              {"scheme", scheme_name(report.scheme)},
              {"is_expectation_bound", report.is_expectation_bound},
              {"theoretically_guaranteed", report.theoretically_guaranteed},
              {"degenerate", report.degenerate},
              {"envelope", report.envelope},
              {"empirical", report.empirical},
              {"standard_error", report.standard_error},
              {"violations", report.violations},
              {"margin_min", report.margin_min},
              {"seeds", report.seeds},
              {"rng_algorithm", Xoshiro256::algorithm_id}};
}

}  // namespace sgdlab
