#include "sot/io.hpp"

#include <array>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace sot {

using nlohmann::json;

std::string format_double(double x) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

namespace {

double parse_double(std::string_view s, const std::string& where) {
  double v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{}) throw InputError(where + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path + "' for reading");
  return f;
}

}  // namespace

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M) {
  std::ofstream f = open_out(path);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) f << ',';
      f << format_double(M(i, j));
    }
    f << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      const std::string_view cell(line.data() + start,
                                  (comma == std::string::npos ? line.size() : comma) - start);
      row.push_back(parse_double(cell, path + ":" + std::to_string(lineno)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": empty matrix");
  Eigen::MatrixXd M(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  return M;
}

namespace {

json measure_to_json(const DiscreteMeasure& measure) {
  json j;
  j["points"] = json::array();
  for (int i = 0; i < measure.size(); ++i) {
    json row = json::array();
    for (int d = 0; d < measure.dim(); ++d) row.push_back(measure.points()(i, d));
    j["points"].push_back(std::move(row));
  }
  j["weights"] = json::array();
  for (int i = 0; i < measure.size(); ++i) j["weights"].push_back(measure.weights()[i]);
  if (measure.has_labels()) j["labels"] = measure.labels();
  return j;
}

DiscreteMeasure measure_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  if (!j.contains("points")) throw InputError(where + "/points: missing");
  const json& pts = j.at("points");
  if (!pts.is_array() || pts.empty()) throw InputError(where + "/points: expected a non-empty array");
  const size_t n = pts.size();
  size_t dim = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!pts[i].is_array() || pts[i].empty())
      throw InputError(where + "/points/" + std::to_string(i) + ": expected a non-empty array");
    if (i == 0)
      dim = pts[i].size();
    else if (pts[i].size() != dim)
      throw InputError(where + "/points/" + std::to_string(i) + ": inconsistent dimension");
  }
  Eigen::MatrixXd P(n, dim);
  for (size_t i = 0; i < n; ++i)
    for (size_t d = 0; d < dim; ++d) {
      if (!pts[i][d].is_number())
        throw InputError(where + "/points/" + std::to_string(i) + "/" + std::to_string(d) +
                         ": expected a number");
      P(i, d) = pts[i][d].get<double>();
    }
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  if (j.contains("weights")) {
    const json& jw = j.at("weights");
    if (!jw.is_array() || jw.size() != n)
      throw InputError(where + "/weights: expected an array matching points");
    for (size_t i = 0; i < n; ++i) {
      if (!jw[i].is_number())
        throw InputError(where + "/weights/" + std::to_string(i) + ": expected a number");
      w[i] = jw[i].get<double>();
    }
  }
  std::optional<std::vector<int>> labels;
  if (j.contains("labels")) {
    const json& jl = j.at("labels");
    if (!jl.is_array() || jl.size() != n)
      throw InputError(where + "/labels: expected an array matching points");
    std::vector<int> l(n);
    for (size_t i = 0; i < n; ++i) {
      if (!jl[i].is_number_integer())
        throw InputError(where + "/labels/" + std::to_string(i) + ": expected an integer");
      l[i] = jl[i].get<int>();
    }
    labels = std::move(l);
  }
  try {
    return DiscreteMeasure(std::move(P), std::move(w), std::move(labels));
  } catch (const InputError& e) {
    throw InputError(where + ": " + e.what());
  }
}

json load_json_file(const std::string& path) {
  std::ifstream f = open_in(path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return j;
}

}  // namespace

void write_measure_json(const std::string& path, const DiscreteMeasure& measure) {
  std::ofstream f = open_out(path);
  f << measure_to_json(measure).dump(2) << '\n';
}

DiscreteMeasure read_measure_json(const std::string& path) {
  return measure_from_json(load_json_file(path), path);
}

// Measure CSV layout: a header row "x0,...,x{d-1},weight[,label]" followed by
// one point per row.  The weight column is optional on input (uniform weights
// are assumed when absent); the label column is optional and integer-valued.
void write_measure_csv(const std::string& path, const DiscreteMeasure& measure) {
  std::ofstream f = open_out(path);
  for (int d = 0; d < measure.dim(); ++d) f << 'x' << d << ',';
  f << "weight";
  if (measure.has_labels()) f << ",label";
  f << '\n';
  for (int i = 0; i < measure.size(); ++i) {
    for (int d = 0; d < measure.dim(); ++d) f << format_double(measure.points()(i, d)) << ',';
    f << format_double(measure.weights()[i]);
    if (measure.has_labels()) f << ',' << measure.labels()[i];
    f << '\n';
  }
}

DiscreteMeasure read_measure_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string line;
  int lineno = 0;
  const auto next_line = [&](std::string& out) {
    while (std::getline(f, out)) {
      ++lineno;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      if (!out.empty()) return true;
    }
    return false;
  };
  const auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    size_t start = 0;
    while (true) {
      const size_t comma = s.find(',', start);
      std::string cell = s.substr(start, (comma == std::string::npos ? s.size() : comma) - start);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.erase(cell.begin());
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.pop_back();
      cells.push_back(std::move(cell));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return cells;
  };

  if (!next_line(line)) throw InputError(path + ": empty measure file");
  const std::vector<std::string> header = split(line);
  size_t dim = 0;
  while (dim < header.size() && header[dim] == "x" + std::to_string(dim)) ++dim;
  if (dim == 0)
    throw InputError(path + ":1: header must start with coordinate columns x0,x1,...");
  size_t col = dim;
  const bool has_weight = col < header.size() && header[col] == "weight";
  if (has_weight) ++col;
  const bool has_label = col < header.size() && header[col] == "label";
  if (has_label) ++col;
  if (col != header.size())
    throw InputError(path + ":1: unexpected header column '" + header[col] + "'");

  std::vector<std::vector<double>> coords;
  std::vector<double> weights;
  std::vector<int> labels;
  while (next_line(line)) {
    const std::vector<std::string> cells = split(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (cells.size() != header.size())
      throw InputError(where + ": expected " + std::to_string(header.size()) + " columns, got " +
                       std::to_string(cells.size()));
    std::vector<double> row(dim);
    for (size_t d = 0; d < dim; ++d) row[d] = parse_double(cells[d], where);
    coords.push_back(std::move(row));
    if (has_weight) weights.push_back(parse_double(cells[dim], where));
    if (has_label) {
      int v = 0;
      const std::string& cell = cells[dim + (has_weight ? 1 : 0)];
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
        throw InputError(where + ": cannot parse label '" + cell + "'");
      labels.push_back(v);
    }
  }
  if (coords.empty()) throw InputError(path + ": no data rows");

  Eigen::MatrixXd P(coords.size(), dim);
  for (size_t i = 0; i < coords.size(); ++i)
    for (size_t d = 0; d < dim; ++d) P(i, d) = coords[i][d];
  Eigen::VectorXd w =
      Eigen::VectorXd::Constant(P.rows(), 1.0 / static_cast<double>(P.rows()));
  if (has_weight)
    w = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  std::optional<std::vector<int>> opt_labels;
  if (has_label) opt_labels = std::move(labels);
  try {
    return DiscreteMeasure(std::move(P), std::move(w), std::move(opt_labels));
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_history_csv(const std::string& path, const std::vector<HistoryRecord>& history) {
  std::ofstream f = open_out(path);
  f << "iteration,f_value,gap,wall_ms\n";
  for (const HistoryRecord& h : history) {
    f << h.iteration << ',' << format_double(h.f_value) << ',' << format_double(h.gap) << ','
      << format_double(h.wall_ms) << '\n';
  }
}

void write_result_json(const std::string& path, const SolveResult& result) {
  json j;
  j["algorithm"] = algorithm_name(result.algorithm);
  j["value"] = result.primal_value;
  j["gap"] = result.gap;
  j["certified"] = result.certified;
  j["iterations"] = result.iterations;
  std::ofstream f = open_out(path);
  f << j.dump(2) << '\n';
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::mda:
      return "mda";
    case Algorithm::spmd:
      return "spmd";
    case Algorithm::spmp:
      return "spmp";
    case Algorithm::emd:
      return "emd";
    case Algorithm::sinkhorn_ot:
      return "sinkhorn";
  }
  return "unknown";
}

Algorithm algorithm_from(const std::string& name) {
  if (name == "mda") return Algorithm::mda;
  if (name == "spmd") return Algorithm::spmd;
  if (name == "spmp") return Algorithm::spmp;
  if (name == "emd") return Algorithm::emd;
  if (name == "sinkhorn" || name == "sinkhorn_ot") return Algorithm::sinkhorn_ot;
  throw InputError("unknown algorithm '" + name + "'");
}

namespace {

ConcaveFn concave_from_json(const json& j, const std::string& where,
                            const std::optional<double>& alpha_override) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  if (!j.contains("kind")) throw InputError(where + "/kind: missing");
  const std::string kind = j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
  if (kind == "identity") return ConcaveFn::identity();
  if (kind == "sqrt") return ConcaveFn::sqrt();
  if (kind == "threshold_sqrt") {
    double alpha = 1.0;
    if (j.contains("alpha")) {
      if (!j.at("alpha").is_number()) throw InputError(where + "/alpha: expected a number");
      alpha = j.at("alpha").get<double>();
    }
    if (alpha_override) alpha = *alpha_override;
    if (!(alpha > 0)) throw InputError(where + "/alpha: must be positive");
    return ConcaveFn::threshold_sqrt(alpha);
  }
  if (kind == "power") {
    if (!j.contains("exponent") || !j.at("exponent").is_number())
      throw InputError(where + "/exponent: expected a number");
    const double p = j.at("exponent").get<double>();
    if (!(p > 0) || p > 1) throw InputError(where + "/exponent: must lie in (0, 1]");
    return ConcaveFn::power(p);
  }
  throw InputError(where + "/kind: unknown concave function '" + kind + "'");
}

std::string resolve(const std::filesystem::path& base, const std::string& ref) {
  std::filesystem::path p(ref);
  if (p.is_absolute()) return p.string();
  return (base / p).string();
}

DiscreteMeasure measure_block(const json& j, const std::string& where,
                              const std::filesystem::path& base) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  if (j.contains("path")) {
    if (!j.at("path").is_string()) throw InputError(where + "/path: expected a string");
    const std::string p = resolve(base, j.at("path").get<std::string>());
    if (p.size() >= 4 && p.compare(p.size() - 4, 4, ".csv") == 0) return read_measure_csv(p);
    return read_measure_json(p);
  }
  return measure_from_json(j, where);
}

}  // namespace

Problem load_problem(const std::string& path, const Overrides& overrides) {
  const json j = load_json_file(path);
  if (!j.is_object()) throw InputError(path + ": expected a JSON object");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  if (!j.contains("source")) throw InputError("/source: missing");
  if (!j.contains("target")) throw InputError("/target: missing");
  DiscreteMeasure src = measure_block(j.at("source"), "/source", base);
  DiscreteMeasure tgt = measure_block(j.at("target"), "/target", base);
  const EdgeIndex idx(src.size(), tgt.size());

  // --- cost block ---
  Metric metric = Metric::euclidean;
  std::optional<Eigen::MatrixXd> cost_entries;
  if (j.contains("cost")) {
    const json& jc = j.at("cost");
    if (!jc.is_object()) throw InputError("/cost: expected an object");
    if (jc.contains("path")) {
      if (!jc.at("path").is_string()) throw InputError("/cost/path: expected a string");
      Eigen::MatrixXd M = read_matrix_csv(resolve(base, jc.at("path").get<std::string>()));
      if (M.rows() != src.size() || M.cols() != tgt.size())
        throw InputError("/cost/path: matrix is " + std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()) + " but the measures need " +
                         std::to_string(src.size()) + "x" + std::to_string(tgt.size()));
      cost_entries = std::move(M);
      metric = Metric::precomputed;
    } else if (jc.contains("metric")) {
      const std::string name =
          jc.at("metric").is_string() ? jc.at("metric").get<std::string>() : "";
      if (name == "euclidean")
        metric = Metric::euclidean;
      else if (name == "squared_euclidean")
        metric = Metric::squared_euclidean;
      else
        throw InputError("/cost/metric: unknown metric '" + name + "'");
    } else {
      throw InputError("/cost: needs either 'metric' or 'path'");
    }
  }
  CostMatrix cost = cost_entries ? CostMatrix(std::move(*cost_entries), Metric::precomputed)
                                 : build_cost(src, tgt, metric);

  // --- structure block ---
  SubmodularCost structure = SubmodularCost::modular(idx, idx.to_flat(cost.entries()));
  if (j.contains("structure")) {
    const json& js = j.at("structure");
    if (!js.is_object()) throw InputError("/structure: expected an object");
    if (!js.contains("type") || !js.at("type").is_string())
      throw InputError("/structure/type: expected a string");
    const std::string type = js.at("type").get<std::string>();
    auto concave = [&]() {
      if (!js.contains("concave")) throw InputError("/structure/concave: missing");
      return concave_from_json(js.at("concave"), "/structure/concave", overrides.alpha);
    };
    if (type == "modular") {
      // keep the default
    } else if (type == "class_groups") {
      if (!src.has_labels()) throw InputError("/structure: source labels are required");
      const bool use_tgt = js.value("use_target_labels", false);
      GroupStructure groups =
          use_tgt ? (tgt.has_labels()
                         ? class_groups(src.labels(), tgt.labels())
                         : throw InputError("/structure/use_target_labels: target has no labels"))
                  : class_groups(src.labels(), tgt.size());
      structure = SubmodularCost::from_groups(groups, cost.entries(), concave());
    } else if (type == "ngram") {
      if (!js.contains("n") || !js.at("n").is_number_integer())
        throw InputError("/structure/n: expected an integer");
      GroupStructure groups = ngram_groups(src.size(), tgt.size(), js.at("n").get<int>());
      structure = SubmodularCost::from_groups(groups, cost.entries(), concave());
    } else if (type == "knn") {
      if (!js.contains("k_neighbors") || !js.at("k_neighbors").is_number_integer())
        throw InputError("/structure/k_neighbors: expected an integer");
      GroupStructure groups =
          knn_groups(src.points(), tgt.points(), js.at("k_neighbors").get<int>());
      structure = SubmodularCost::from_groups(groups, cost.entries(), concave());
    } else if (type == "groups") {
      if (!js.contains("groups") || !js.at("groups").is_array())
        throw InputError("/structure/groups: expected an array of edge-id arrays");
      std::vector<std::vector<int>> raw;
      const json& jg = js.at("groups");
      for (size_t g = 0; g < jg.size(); ++g) {
        if (!jg[g].is_array())
          throw InputError("/structure/groups/" + std::to_string(g) + ": expected an array");
        std::vector<int> edges;
        for (size_t e = 0; e < jg[g].size(); ++e) {
          if (!jg[g][e].is_number_integer())
            throw InputError("/structure/groups/" + std::to_string(g) + "/" + std::to_string(e) +
                             ": expected an integer edge id");
          edges.push_back(jg[g][e].get<int>());
        }
        raw.push_back(std::move(edges));
      }
      const std::string cover = js.value("cover", std::string("cover"));
      GroupStructure::CoverType ct;
      if (cover == "partition")
        ct = GroupStructure::CoverType::partition;
      else if (cover == "cover")
        ct = GroupStructure::CoverType::cover;
      else
        throw InputError("/structure/cover: expected 'partition' or 'cover'");
      const bool rem = js.value("singleton_remainder", true);
      try {
        GroupStructure groups(std::move(raw), ct, rem, idx);
        structure = SubmodularCost::from_groups(groups, cost.entries(), concave());
      } catch (const InputError& e) {
        throw InputError("/structure/groups: " + std::string(e.what()));
      }
    } else {
      throw InputError("/structure/type: unknown structure '" + type + "'");
    }
  }

  // --- solver block + overrides ---
  SolverConfig cfg;
  if (j.contains("solver")) {
    const json& jv = j.at("solver");
    if (!jv.is_object()) throw InputError("/solver: expected an object");
    auto num = [&](const char* key, double fallback) {
      if (!jv.contains(key)) return fallback;
      if (!jv.at(key).is_number()) throw InputError(std::string("/solver/") + key + ": expected a number");
      return jv.at(key).get<double>();
    };
    if (jv.contains("algorithm")) {
      if (!jv.at("algorithm").is_string())
        throw InputError("/solver/algorithm: expected a string");
      try {
        cfg.algorithm = algorithm_from(jv.at("algorithm").get<std::string>());
      } catch (const InputError& e) {
        throw InputError("/solver/algorithm: " + std::string(e.what()));
      }
    }
    cfg.eta0 = num("eta0", cfg.eta0);
    cfg.tol = num("tol", cfg.tol);
    cfg.max_iter = static_cast<int>(num("max_iter", cfg.max_iter));
    cfg.gap_every = static_cast<int>(num("gap_every", cfg.gap_every));
    cfg.entropic_lambda = num("lambda", cfg.entropic_lambda);
    cfg.seed = static_cast<std::uint64_t>(num("seed", static_cast<double>(cfg.seed)));
    if (jv.contains("step_rule")) {
      const std::string rule =
          jv.at("step_rule").is_string() ? jv.at("step_rule").get<std::string>() : "";
      if (rule == "auto")
        cfg.step_rule = StepRule::auto_rule;
      else if (rule == "inv_sqrt_t")
        cfg.step_rule = StepRule::inv_sqrt_t;
      else if (rule == "constant")
        cfg.step_rule = StepRule::constant;
      else
        throw InputError("/solver/step_rule: expected auto, inv_sqrt_t or constant");
    }
  }
  if (overrides.algorithm) cfg.algorithm = algorithm_from(*overrides.algorithm);
  if (overrides.eta0) cfg.eta0 = *overrides.eta0;
  if (overrides.tol) cfg.tol = *overrides.tol;
  if (overrides.max_iter) cfg.max_iter = *overrides.max_iter;
  if (overrides.lambda) cfg.entropic_lambda = *overrides.lambda;
  if (overrides.seed) cfg.seed = *overrides.seed;

  // --- output block ---
  std::string out_dir = ".";
  std::string prefix = "run";
  if (j.contains("output")) {
    const json& jo = j.at("output");
    if (!jo.is_object()) throw InputError("/output: expected an object");
    out_dir = jo.value("dir", out_dir);
    prefix = jo.value("prefix", prefix);
  }
  if (overrides.out_dir) out_dir = *overrides.out_dir;

  // --- adapt block ---
  std::optional<DiscreteMeasure> test;
  std::vector<Algorithm> methods;
  if (j.contains("adapt")) {
    const json& ja = j.at("adapt");
    if (!ja.is_object()) throw InputError("/adapt: expected an object");
    if (!ja.contains("test")) throw InputError("/adapt/test: missing");
    test = measure_block(ja.at("test"), "/adapt/test", base);
    if (ja.contains("methods")) {
      if (!ja.at("methods").is_array()) throw InputError("/adapt/methods: expected an array");
      for (size_t k = 0; k < ja.at("methods").size(); ++k) {
        if (!ja.at("methods")[k].is_string())
          throw InputError("/adapt/methods/" + std::to_string(k) + ": expected a string");
        try {
          methods.push_back(algorithm_from(ja.at("methods")[k].get<std::string>()));
        } catch (const InputError& e) {
          throw InputError("/adapt/methods/" + std::to_string(k) + ": " + std::string(e.what()));
        }
      }
    } else {
      methods = {Algorithm::spmp, Algorithm::emd, Algorithm::sinkhorn_ot};
    }
  }

  return Problem{std::move(src),     std::move(tgt), std::move(cost), std::move(structure),
                 cfg,                std::move(out_dir), std::move(prefix), std::move(test),
                 std::move(methods)};
}

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("SOT_LOG_LEVEL");
    if (!env) return LogLevel::error;
    const std::string s(env);
    if (s == "debug") return LogLevel::debug;
    if (s == "info") return LogLevel::info;
    return LogLevel::error;
  }();
  return level;
}

void log_line(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  const char* tag = level == LogLevel::error ? "error" : (level == LogLevel::info ? "info" : "debug");
  std::cerr << "[" << tag << "] " << msg << '\n';
}

}  // namespace sot
