#include "coordlqr/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace coordlqr {

namespace {

[[noreturn]] void fail_at(const toml::source_region& where, std::string_view source,
                          const std::string& what) {
  std::ostringstream os;
  os << source << ":" << where.begin.line << ":" << where.begin.column << ": " << what;
  throw Error(ErrorKind::ParseError, os.str());
}

[[noreturn]] void fail_in(std::string_view source, const std::string& what) {
  std::ostringstream os;
  os << source << ": " << what;
  throw Error(ErrorKind::ParseError, os.str());
}

std::optional<double> as_number(const toml::node& node) {
  if (auto v = node.value<double>()) return *v;  // also converts integers
  return std::nullopt;
}

double number(const toml::node& node, std::string_view source, const std::string& name) {
  auto v = as_number(node);
  if (!v) fail_at(node.source(), source, name + ": expected a number");
  return *v;
}

Vector vector_of(const toml::node& node, std::string_view source, const std::string& name) {
  if (auto x = as_number(node)) return Vector::Constant(1, *x);
  const auto* arr = node.as_array();
  if (!arr) fail_at(node.source(), source, name + ": expected an array of numbers");
  Vector out(static_cast<Eigen::Index>(arr->size()));
  for (std::size_t i = 0; i < arr->size(); ++i) {
    out(static_cast<Eigen::Index>(i)) =
        number(*arr->get(i), source, name + "[" + std::to_string(i) + "]");
  }
  return out;
}

Matrix matrix_of(const toml::node& node, std::string_view source, const std::string& name) {
  if (auto x = as_number(node)) return Matrix::Constant(1, 1, *x);
  const auto* rows = node.as_array();
  if (!rows || rows->empty()) {
    fail_at(node.source(), source, name + ": expected a nested array (list of rows)");
  }
  Matrix out;
  for (std::size_t r = 0; r < rows->size(); ++r) {
    const auto& row_node = *rows->get(r);
    if (!row_node.is_array()) {
      fail_at(row_node.source(), source, name + ": each row must be an array");
    }
    const Vector row = vector_of(row_node, source, name + "[" + std::to_string(r) + "]");
    if (r == 0) {
      out.resize(static_cast<Eigen::Index>(rows->size()), row.size());
    } else if (row.size() != out.cols()) {
      fail_at(row_node.source(), source, name + ": ragged rows");
    }
    out.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return out;
}

const toml::node& require(const toml::table& table, std::string_view key,
                          std::string_view section, std::string_view source) {
  const toml::node* node = table.get(key);
  if (!node) {
    fail_in(source, "missing key '" + std::string(key) + "' in [" + std::string(section) + "]");
  }
  return *node;
}

int integer(const toml::node& node, std::string_view source, const std::string& name) {
  auto v = node.value<int64_t>();
  if (!v || !node.is_integer()) fail_at(node.source(), source, name + ": expected an integer");
  if (*v < 0 || *v > 100000000) fail_at(node.source(), source, name + ": out of range");
  return static_cast<int>(*v);
}

std::string string_of(const toml::node& node, std::string_view source,
                      const std::string& name) {
  auto v = node.value<std::string>();
  if (!v || !node.is_string()) fail_at(node.source(), source, name + ": expected a string");
  return *v;
}

void reject_unknown(const toml::table& table, std::string_view section,
                    std::initializer_list<std::string_view> known, std::string_view source) {
  for (const auto& [key, node] : table) {
    bool ok = false;
    for (auto k : known) ok = ok || key.str() == k;
    if (!ok) {
      fail_at(node.source(), source,
              "unknown key '" + std::string(key.str()) + "' in [" + std::string(section) + "]");
    }
  }
}

void emit_matrix(std::ostream& os, const Matrix& M) {
  os << "[";
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    os << (r ? ", [" : "[");
    for (Eigen::Index c = 0; c < M.cols(); ++c) os << (c ? ", " : "") << format_number(M(r, c));
    os << "]";
  }
  os << "]";
}

void emit_vector(std::ostream& os, const Vector& x) {
  os << "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << format_number(x(i));
  os << "]";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

RunConfig parse_config(std::string_view text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    fail_at(e.source(), source, std::string(e.description()));
  }
  reject_unknown(root, "", {"ensemble", "policy", "initial", "tolerances", "outputs"}, source);

  RunConfig cfg;
  const auto* ens = root["ensemble"].as_table();
  if (!ens) fail_in(source, "missing [ensemble] section");
  reject_unknown(*ens, "ensemble", {"A", "B", "Q", "R", "mu", "v"}, source);
  cfg.ensemble.A = matrix_of(require(*ens, "A", "ensemble", source), source, "A");
  cfg.ensemble.B = matrix_of(require(*ens, "B", "ensemble", source), source, "B");
  cfg.ensemble.Q = matrix_of(require(*ens, "Q", "ensemble", source), source, "Q");
  cfg.ensemble.R = matrix_of(require(*ens, "R", "ensemble", source), source, "R");
  const auto& mu_node = require(*ens, "mu", "ensemble", source);
  cfg.ensemble.mu = vector_of(mu_node, source, "mu");
  if (const auto* vn = ens->get("v")) {
    const int v = integer(*vn, source, "v");
    if (v != cfg.ensemble.mu.size()) {
      fail_at(vn->source(), source,
              "v = " + std::to_string(v) + " but mu has " +
                  std::to_string(cfg.ensemble.mu.size()) + " entries");
    }
  }

  if (const auto* pol = root["policy"].as_table()) {
    reject_unknown(*pol, "policy", {"Fbar", "Fbar_schedule", "horizon", "steps"}, source);
    if (const auto* f = pol->get("Fbar")) cfg.fbar = matrix_of(*f, source, "Fbar");
    if (const auto* fs = pol->get("Fbar_schedule")) {
      const auto* arr = fs->as_array();
      if (!arr || arr->empty()) {
        fail_at(fs->source(), source, "Fbar_schedule: expected a non-empty array of gains");
      }
      std::vector<Matrix> seq;
      for (std::size_t k = 0; k < arr->size(); ++k) {
        seq.push_back(matrix_of(*arr->get(k), source, "Fbar_schedule[" + std::to_string(k) + "]"));
      }
      cfg.fbar_schedule = std::move(seq);
    }
    if (cfg.fbar && cfg.fbar_schedule) {
      fail_at(pol->source(), source, "give either Fbar or Fbar_schedule, not both");
    }
    if (const auto* h = pol->get("horizon")) cfg.horizon = integer(*h, source, "horizon");
    if (const auto* s = pol->get("steps")) cfg.steps = integer(*s, source, "steps");
  }

  if (const auto* init = root["initial"].as_table()) {
    reject_unknown(*init, "initial", {"x0"}, source);
    const auto& x0 = require(*init, "x0", "initial", source);
    const auto* arr = x0.as_array();
    if (!arr) fail_at(x0.source(), source, "x0: expected an array of state vectors");
    InitialCondition ic;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      ic.push_back(vector_of(*arr->get(i), source, "x0[" + std::to_string(i) + "]"));
    }
    cfg.initial = std::move(ic);
  }

  if (const auto* tol = root["tolerances"].as_table()) {
    reject_unknown(*tol, "tolerances",
                   {"tol_psd", "tol_alg", "tol_are", "tol_kkt", "tol_rank", "tol_eig", "max_iter"},
                   source);
    auto& t = cfg.tolerances;
    auto set = [&](const char* key, double& field) {
      if (const auto* node = tol->get(key)) {
        field = number(*node, source, key);
        if (!(field > 0.0)) fail_at(node->source(), source, std::string(key) + " must be positive");
      }
    };
    set("tol_psd", t.psd);
    set("tol_alg", t.alg);
    set("tol_are", t.are);
    set("tol_kkt", t.kkt);
    set("tol_rank", t.rank);
    set("tol_eig", t.eig);
    if (const auto* node = tol->get("max_iter")) t.max_iter = integer(*node, source, "max_iter");
  }

  if (const auto* out = root["outputs"].as_table()) {
    reject_unknown(*out, "outputs", {"dir", "trajectory", "averages", "report"}, source);
    auto set = [&](const char* key, std::string& field) {
      if (const auto* node = out->get(key)) field = string_of(*node, source, key);
    };
    set("dir", cfg.outputs.dir);
    set("trajectory", cfg.outputs.trajectory);
    set("averages", cfg.outputs.averages);
    set("report", cfg.outputs.report);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string write_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[ensemble]\n";
  os << "A = ";
  emit_matrix(os, cfg.ensemble.A);
  os << "\nB = ";
  emit_matrix(os, cfg.ensemble.B);
  os << "\nQ = ";
  emit_matrix(os, cfg.ensemble.Q);
  os << "\nR = ";
  emit_matrix(os, cfg.ensemble.R);
  os << "\nmu = ";
  emit_vector(os, cfg.ensemble.mu);
  os << "\nv = " << cfg.ensemble.mu.size() << "\n";

  os << "\n[policy]\n";
  if (cfg.fbar) {
    os << "Fbar = ";
    emit_matrix(os, *cfg.fbar);
    os << "\n";
  }
  if (cfg.fbar_schedule) {
    os << "Fbar_schedule = [\n";
    for (const auto& g : *cfg.fbar_schedule) {
      os << "  ";
      emit_matrix(os, g);
      os << ",\n";
    }
    os << "]\n";
  }
  if (cfg.horizon) os << "horizon = " << *cfg.horizon << "\n";
  if (cfg.steps) os << "steps = " << *cfg.steps << "\n";

  if (cfg.initial) {
    os << "\n[initial]\nx0 = [";
    for (std::size_t i = 0; i < cfg.initial->size(); ++i) {
      os << (i ? ", " : "");
      emit_vector(os, (*cfg.initial)[i]);
    }
    os << "]\n";
  }

  const auto& t = cfg.tolerances;
  os << "\n[tolerances]\n"
     << "tol_psd = " << format_number(t.psd) << "\n"
     << "tol_alg = " << format_number(t.alg) << "\n"
     << "tol_are = " << format_number(t.are) << "\n"
     << "tol_kkt = " << format_number(t.kkt) << "\n"
     << "tol_rank = " << format_number(t.rank) << "\n"
     << "tol_eig = " << format_number(t.eig) << "\n"
     << "max_iter = " << t.max_iter << "\n";

  os << "\n[outputs]\n";
  if (!cfg.outputs.dir.empty()) os << "dir = " << quoted(cfg.outputs.dir) << "\n";
  os << "trajectory = " << quoted(cfg.outputs.trajectory) << "\n"
     << "averages = " << quoted(cfg.outputs.averages) << "\n"
     << "report = " << quoted(cfg.outputs.report) << "\n";
  return os.str();
}

Ensemble make_ensemble(const RunConfig& config) {
  return Ensemble::validate(config.ensemble, config.tolerances.psd);
}

ConstraintPolicy make_policy(const RunConfig& config) {
  if (config.fbar) return ConstraintPolicy::constant(*config.fbar);
  if (config.fbar_schedule) return ConstraintPolicy::schedule(*config.fbar_schedule);
  throw Error(ErrorKind::ParseError, "[policy] needs Fbar or Fbar_schedule");
}

}  // namespace coordlqr
