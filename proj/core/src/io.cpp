#include "aefie/io.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aefie/knots.hpp"

namespace aefie {

namespace {

[[noreturn]] void fail_at(int line, const std::string& message) {
  throw ValidationError("line " + std::to_string(line) + ": " + message);
}

double to_double(const std::string& token, int line, const std::string& what) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    fail_at(line, "expected a number for " + what + ", got '" + token + "'");
  }
  return value;
}

int to_int(const std::string& token, int line, const std::string& what) {
  int value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    fail_at(line, "expected an integer for " + what + ", got '" + token + "'");
  }
  return value;
}

/// Whitespace tokens of a stream with their one-based line numbers;
/// '#' comments run to the end of the line.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) {
    std::string text;
    int line = 0;
    while (std::getline(in, text)) {
      ++line;
      const std::size_t comment = text.find('#');
      if (comment != std::string::npos) {
        text.erase(comment);
      }
      std::istringstream fields(text);
      std::string token;
      while (fields >> token) {
        tokens_.emplace_back(line, std::move(token));
        token.clear();
      }
    }
    last_line_ = line;
  }

  bool at_end() const { return cursor_ >= tokens_.size(); }

  int line() const {
    return at_end() ? last_line_ : tokens_[cursor_].first;
  }

  std::string next(const std::string& what) {
    if (at_end()) {
      fail_at(last_line_, "unexpected end of file, expected " + what);
    }
    return tokens_[cursor_++].second;
  }

  void expect(const std::string& keyword) {
    const int at = line();
    const std::string token = next("keyword '" + keyword + "'");
    if (token != keyword) {
      fail_at(at, "expected '" + keyword + "', got '" + token + "'");
    }
  }

  double next_double(const std::string& what) {
    const int at = line();
    return to_double(next(what), at, what);
  }

  int next_int(const std::string& what) {
    const int at = line();
    return to_int(next(what), at, what);
  }

 private:
  std::vector<std::pair<int, std::string>> tokens_;
  std::size_t cursor_ = 0;
  int last_line_ = 0;
};

KnotVector read_knots(TokenReader& reader, const std::string& keyword,
                      int degree, int patch) {
  reader.expect(keyword);
  const int line = reader.line();
  const int count = reader.next_int(keyword + " count");
  if (count < 2 * (degree + 1)) {
    fail_at(line, "patch " + std::to_string(patch) + " " + keyword + ": " +
                      std::to_string(count) + " knots cannot be " +
                      std::to_string(degree) + "-open");
  }
  std::vector<double> knots(count);
  for (int i = 0; i < count; ++i) {
    knots[i] = reader.next_double(keyword + " value");
  }
  try {
    return KnotVector(degree, std::move(knots));
  } catch (const ValidationError& error) {
    fail_at(line, "patch " + std::to_string(patch) + " " + keyword + ": " +
                      error.what());
  }
}

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

double sign_value(const std::string& value, int line, const std::string& key) {
  const double sign = to_double(value, line, key);
  if (sign != 1.0 && sign != -1.0) {
    fail_at(line, key + " must be +1 or -1");
  }
  return sign;
}

bool switch_value(const std::string& value, int line, const std::string& key) {
  if (value == "on" || value == "true") {
    return true;
  }
  if (value == "off" || value == "false") {
    return false;
  }
  fail_at(line, key + " must be on or off, got '" + value + "'");
}

}  // namespace

MultiPatchGeometry parse_geometry(std::istream& in, const std::string& name) {
  TokenReader reader(in);
  reader.expect("NURBS_MULTIPATCH");
  const int version_line = reader.line();
  const int version = reader.next_int("format version");
  if (version != 1) {
    fail_at(version_line,
            "unsupported format version " + std::to_string(version));
  }
  reader.expect("patches");
  const int count_line = reader.line();
  const int num_patches = reader.next_int("patch count");
  if (num_patches < 1) {
    fail_at(count_line, "patch count must be positive");
  }

  MultiPatchGeometry geometry;
  geometry.name = name;
  for (int p = 0; p < num_patches; ++p) {
    reader.expect("patch");
    const int id_line = reader.line();
    const int id = reader.next_int("patch id");
    if (id != p) {
      fail_at(id_line, "expected patch " + std::to_string(p) + ", got " +
                           std::to_string(id));
    }
    reader.expect("degrees");
    const int degree_line = reader.line();
    const int degree_u = reader.next_int("degree in u");
    const int degree_v = reader.next_int("degree in v");
    if (degree_u < 1 || degree_u > kMaxDegree || degree_v < 1 ||
        degree_v > kMaxDegree) {
      fail_at(degree_line, "degrees must lie in [1, " +
                               std::to_string(kMaxDegree) + "]");
    }
    KnotVector knots_u = read_knots(reader, "knots_u", degree_u, p);
    KnotVector knots_v = read_knots(reader, "knots_v", degree_v, p);

    reader.expect("net");
    const int net_line = reader.line();
    const int num_u = reader.next_int("net size in u");
    const int num_v = reader.next_int("net size in v");
    if (num_u != knots_u.num_basis() || num_v != knots_v.num_basis()) {
      fail_at(net_line, "patch " + std::to_string(p) + " net is " +
                            std::to_string(num_u) + " x " +
                            std::to_string(num_v) + " but the knots span " +
                            std::to_string(knots_u.num_basis()) + " x " +
                            std::to_string(knots_v.num_basis()) +
                            " basis functions");
    }
    std::vector<Vec3> net;
    std::vector<double> weights;
    net.reserve(num_u * num_v);
    weights.reserve(num_u * num_v);
    for (int i = 0; i < num_u * num_v; ++i) {
      const double x = reader.next_double("control point x");
      const double y = reader.next_double("control point y");
      const double z = reader.next_double("control point z");
      const int weight_line = reader.line();
      const double w = reader.next_double("control point weight");
      if (!(w > 0.0)) {
        fail_at(weight_line, "control point weights must be positive");
      }
      net.emplace_back(x, y, z);
      weights.push_back(w);
    }
    geometry.patches.emplace_back(std::move(knots_u), std::move(knots_v),
                                  std::move(net), std::move(weights));
  }
  if (!reader.at_end()) {
    fail_at(reader.line(), "trailing content after the last patch");
  }
  return geometry;
}

MultiPatchGeometry load_geometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open geometry file '" + path + "'");
  }
  try {
    return parse_geometry(in, std::filesystem::path(path).stem().string());
  } catch (const ValidationError& error) {
    throw ValidationError(path + ": " + error.what());
  }
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::set<std::string> seen;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    const std::size_t comment = text.find('#');
    if (comment != std::string::npos) {
      text.erase(comment);
    }
    if (trim(text).empty()) {
      continue;
    }
    const std::size_t equals = text.find('=');
    if (equals == std::string::npos) {
      fail_at(line, "expected 'key = value', got '" + trim(text) + "'");
    }
    const std::string key = trim(text.substr(0, equals));
    const std::string value = trim(text.substr(equals + 1));
    if (key.empty() || value.empty()) {
      fail_at(line, "expected 'key = value', got '" + trim(text) + "'");
    }
    if (!seen.insert(key).second) {
      fail_at(line, "duplicate key '" + key + "'");
    }

    if (key == "frequency") {
      config.frequency = to_double(value, line, key);
      if (!(config.frequency >= 0.0)) {
        fail_at(line, "frequency must be nonnegative");
      }
    } else if (key == "solution.degree") {
      config.degree = to_int(value, line, key);
      if (config.degree < 1 || config.degree > 10) {
        fail_at(line, "solution.degree must lie in [1, 10]");
      }
    } else if (key == "solution.level") {
      config.level = to_int(value, line, key);
      if (config.level < 0 || config.level > 10) {
        fail_at(line, "solution.level must lie in [0, 10]");
      }
    } else if (key == "convergence.levels") {
      std::istringstream fields(value);
      std::vector<int> levels;
      std::string token;
      while (fields >> token) {
        const int entry = to_int(token, line, key);
        if (entry < 0 || entry > 10) {
          fail_at(line, "convergence levels must lie in [0, 10]");
        }
        if (!levels.empty() && entry <= levels.back()) {
          fail_at(line, "convergence levels must increase strictly");
        }
        levels.push_back(entry);
      }
      if (levels.size() < 2) {
        fail_at(line, "convergence needs at least two levels");
      }
      config.convergence_levels = std::move(levels);
    } else if (key == "sweep.f_max") {
      config.sweep.f_max = to_double(value, line, key);
      if (!(config.sweep.f_max > 0.0)) {
        fail_at(line, "sweep.f_max must be positive");
      }
    } else if (key == "sweep.f_min") {
      config.sweep.f_min = to_double(value, line, key);
      if (!(config.sweep.f_min > 0.0)) {
        fail_at(line, "sweep.f_min must be positive");
      }
    } else if (key == "sweep.count") {
      config.sweep.count = to_int(value, line, key);
      if (config.sweep.count < 2) {
        fail_at(line, "sweep.count must be at least 2");
      }
    } else if (key == "excitation.kind") {
      if (value == "dipole") {
        config.excitation.kind = ExcitationKind::Dipole;
      } else if (value == "none") {
        config.excitation.kind = ExcitationKind::None;
      } else {
        fail_at(line, "excitation.kind must be dipole or none");
      }
    } else if (key == "excitation.position" || key == "excitation.moment") {
      std::istringstream fields(value);
      std::vector<double> parts;
      std::string token;
      while (fields >> token) {
        parts.push_back(to_double(token, line, key));
      }
      if (parts.size() != 3) {
        fail_at(line, key + " needs exactly three components");
      }
      const Vec3 vector(parts[0], parts[1], parts[2]);
      if (key == "excitation.position") {
        config.excitation.position = vector;
      } else {
        config.excitation.moment = vector;
      }
    } else if (key == "excitation.trace") {
      if (value == "plain") {
        config.excitation.trace = ExcitationTrace::Plain;
      } else if (value == "cross") {
        config.excitation.trace = ExcitationTrace::Cross;
      } else {
        fail_at(line, "excitation.trace must be plain or cross");
      }
    } else if (key == "excitation.phase_sign") {
      config.excitation.phase_sign = sign_value(value, line, key);
    } else if (key == "postprocess.num_points") {
      config.postprocess.num_points = to_int(value, line, key);
      if (config.postprocess.num_points < 1) {
        fail_at(line, "postprocess.num_points must be positive");
      }
    } else if (key == "postprocess.radius") {
      config.postprocess.radius = to_double(value, line, key);
      if (!(config.postprocess.radius > 0.0)) {
        fail_at(line, "postprocess.radius must be positive");
      }
    } else if (key == "postprocess.eval_degree") {
      config.postprocess.eval_degree = to_int(value, line, key);
      if (config.postprocess.eval_degree < 0 ||
          config.postprocess.eval_degree > 64) {
        fail_at(line, "postprocess.eval_degree must lie in [0, 64]");
      }
    } else if (key == "postprocess.guard_factor") {
      config.postprocess.guard_factor = to_double(value, line, key);
      if (!(config.postprocess.guard_factor > 0.0)) {
        fail_at(line, "postprocess.guard_factor must be positive");
      }
    } else if (key == "postprocess.reference_sign") {
      config.postprocess.reference_sign = sign_value(value, line, key);
    } else if (key == "medium.epsilon") {
      config.medium.epsilon = to_double(value, line, key);
      if (!(config.medium.epsilon > 0.0)) {
        fail_at(line, "medium.epsilon must be positive");
      }
    } else if (key == "medium.mu") {
      config.medium.mu = to_double(value, line, key);
      if (!(config.medium.mu > 0.0)) {
        fail_at(line, "medium.mu must be positive");
      }
    } else if (key == "quadrature.base_degree") {
      config.quadrature.base_degree = to_int(value, line, key);
      if (config.quadrature.base_degree < 0 ||
          config.quadrature.base_degree > 30) {
        fail_at(line, "quadrature.base_degree must lie in [0, 30]");
      }
    } else if (key == "quadrature.alpha") {
      config.quadrature.alpha = to_double(value, line, key);
      if (!(config.quadrature.alpha >= 0.0)) {
        fail_at(line, "quadrature.alpha must be nonnegative");
      }
    } else if (key == "quadrature.singular_degree") {
      config.quadrature.singular_degree = to_int(value, line, key);
      if (config.quadrature.singular_degree < 1 ||
          config.quadrature.singular_degree > 20) {
        fail_at(line, "quadrature.singular_degree must lie in [1, 20]");
      }
    } else if (key == "system.deflation") {
      config.system.deflation = switch_value(value, line, key);
    } else if (key == "system.condition_estimator") {
      if (value == "svd") {
        config.system.estimator = ConditionEstimator::Svd;
      } else if (value == "norm1") {
        config.system.estimator = ConditionEstimator::Norm1;
      } else {
        fail_at(line, "system.condition_estimator must be svd or norm1");
      }
    } else if (key == "system.scaling_reference") {
      if (value == "auto") {
        config.system.scaling_reference = 0.0;
      } else {
        config.system.scaling_reference = to_double(value, line, key);
        if (!(config.system.scaling_reference > 0.0)) {
          fail_at(line, "system.scaling_reference must be auto or a positive "
                        "frequency");
        }
      }
    } else if (key == "system.sign_s") {
      config.system.sign_s = sign_value(value, line, key);
    } else if (key == "system.sign_m") {
      config.system.sign_m = sign_value(value, line, key);
    } else if (key == "assembly.workers") {
      config.workers = to_int(value, line, key);
      if (config.workers < 1 || config.workers > 64) {
        fail_at(line, "assembly.workers must lie in [1, 64]");
      }
    } else if (key == "output.directory") {
      config.output_directory = value;
    } else {
      fail_at(line, "unknown key '" + key + "'");
    }
  }
  if (config.sweep.f_min > config.sweep.f_max) {
    throw ValidationError("sweep.f_min exceeds sweep.f_max");
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config file '" + path + "'");
  }
  try {
    return parse_config(in);
  } catch (const ValidationError& error) {
    throw ValidationError(path + ": " + error.what());
  }
}

std::vector<std::string> resolved_config_lines(const RunConfig& config) {
  std::vector<std::string> lines;
  auto add = [&lines](const std::string& key, const std::string& value) {
    lines.push_back(key + " = " + value);
  };
  add("frequency", format_number(config.frequency));
  add("solution.degree", std::to_string(config.degree));
  add("solution.level", std::to_string(config.level));
  std::string levels;
  for (const int level : config.convergence_levels) {
    levels += (levels.empty() ? "" : " ") + std::to_string(level);
  }
  add("convergence.levels", levels);
  add("sweep.f_max", format_number(config.sweep.f_max));
  add("sweep.f_min", format_number(config.sweep.f_min));
  add("sweep.count", std::to_string(config.sweep.count));
  add("excitation.kind",
      config.excitation.kind == ExcitationKind::Dipole ? "dipole" : "none");
  const Vec3& position = config.excitation.position;
  add("excitation.position", format_number(position.x()) + " " +
                                 format_number(position.y()) + " " +
                                 format_number(position.z()));
  const Vec3& moment = config.excitation.moment;
  add("excitation.moment", format_number(moment.x()) + " " +
                               format_number(moment.y()) + " " +
                               format_number(moment.z()));
  add("excitation.trace",
      config.excitation.trace == ExcitationTrace::Plain ? "plain" : "cross");
  add("excitation.phase_sign", format_number(config.excitation.phase_sign));
  add("postprocess.num_points",
      std::to_string(config.postprocess.num_points));
  add("postprocess.radius", format_number(config.postprocess.radius));
  add("postprocess.eval_degree",
      std::to_string(config.postprocess.eval_degree));
  add("postprocess.guard_factor",
      format_number(config.postprocess.guard_factor));
  add("postprocess.reference_sign",
      format_number(config.postprocess.reference_sign));
  add("medium.epsilon", format_number(config.medium.epsilon));
  add("medium.mu", format_number(config.medium.mu));
  add("quadrature.base_degree",
      std::to_string(config.quadrature.base_degree));
  add("quadrature.alpha", format_number(config.quadrature.alpha));
  add("quadrature.singular_degree",
      std::to_string(config.quadrature.singular_degree));
  add("system.deflation", config.system.deflation ? "on" : "off");
  add("system.condition_estimator",
      config.system.estimator == ConditionEstimator::Svd ? "svd" : "norm1");
  add("system.scaling_reference",
      config.system.scaling_reference > 0.0
          ? format_number(config.system.scaling_reference)
          : "auto");
  add("system.sign_s", format_number(config.system.sign_s));
  add("system.sign_m", format_number(config.system.sign_m));
  add("assembly.workers", std::to_string(config.workers));
  add("output.directory", config.output_directory);
  return lines;
}

std::string format_number(double value) {
  char buffer[64];
  const auto result =
      std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open output file '" + path + "'");
  }
  auto write_row = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out << (i > 0 ? "," : "") << cells[i];
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw ValidationError("CSV row width " + std::to_string(row.size()) +
                            " does not match header width " +
                            std::to_string(header.size()));
    }
    write_row(row);
  }
  out.flush();
  if (!out) {
    throw ValidationError("writing '" + path + "' failed");
  }
}

}  // namespace aefie
