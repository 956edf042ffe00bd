#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "sot/harness.hpp"
#include "sot/measures.hpp"
#include "sot/solvers.hpp"
#include "sot/submodular.hpp"

namespace sot {

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double x);

// Dense matrices as row-major CSV, one row per line, full precision.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// Measures as JSON: {"points": [[...]], "weights": [...], "labels": [...]}.
void write_measure_json(const std::string& path, const DiscreteMeasure& measure);
DiscreteMeasure read_measure_json(const std::string& path);

// Points plus a trailing label column (or blank when unlabeled), one row per
// sample; the plot-friendly companion of the JSON form.
void write_measure_csv(const std::string& path, const DiscreteMeasure& measure);
DiscreteMeasure read_measure_csv(const std::string& path);

void write_history_csv(const std::string& path, const std::vector<HistoryRecord>& history);
void write_result_json(const std::string& path, const SolveResult& result);

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from(const std::string& name);  // InputError on unknown names

// Fully assembled problem instance as described by a problem JSON file.
struct Problem {
  DiscreteMeasure src;
  DiscreteMeasure tgt;
  CostMatrix cost;
  SubmodularCost structure;
  SolverConfig solver;
  std::string out_dir;
  std::string prefix;
  std::optional<DiscreteMeasure> test;     // adapt block only
  std::vector<Algorithm> adapt_methods;    // adapt block only
};

// Command-line overrides applied on top of the problem file.
struct Overrides {
  std::optional<std::string> algorithm;
  std::optional<double> eta0;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<double> alpha;   // replaces the concave threshold
  std::optional<double> lambda;  // entropic regularization
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

// Parses and validates a problem file; schema violations raise InputError
// with a JSON-pointer path to the offending field.  Relative file references
// resolve against the problem file's directory.
Problem load_problem(const std::string& path, const Overrides& overrides = {});

enum class LogLevel { error = 0, info = 1, debug = 2 };
LogLevel log_level();  // from SOT_LOG_LEVEL, default error
void log_line(LogLevel level, const std::string& msg);

}  // namespace sot
