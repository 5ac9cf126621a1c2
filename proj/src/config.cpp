#include "oulab/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include "oulab/errors.hpp"

namespace oulab {

namespace {

double number(const toml::node& n, const std::string& what) {
  if (auto v = n.value<double>()) return *v;
  throw config_error(what + " must be a number");
}

Vec vector_of(const toml::node* n, const std::string& what) {
  const toml::array* arr = n ? n->as_array() : nullptr;
  if (!arr || arr->empty()) throw config_error(what + " must be a non-empty array of numbers");
  Vec v(static_cast<Eigen::Index>(arr->size()));
  for (std::size_t i = 0; i < arr->size(); ++i) v[static_cast<Eigen::Index>(i)] = number((*arr)[i], what);
  return v;
}

double scalar_of(const toml::table& t, const char* key, const std::string& what) {
  const toml::node* n = t.get(key);
  if (!n) throw config_error(what + "." + key + " is required");
  return number(*n, what + "." + key);
}

Mat matrix_of(const toml::node* n) {
  const toml::array* rows = n ? n->as_array() : nullptr;
  if (!rows || rows->empty()) throw config_error("model.a must be a non-empty array of rows");
  const auto d = static_cast<Eigen::Index>(rows->size());
  Mat a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Vec row = vector_of(&(*rows)[static_cast<std::size_t>(i)], "model.a row");
    if (row.size() != d) throw config_error("model.a must be square");
    a.row(i) = row.transpose();
  }
  return a;
}

Domain domain_of(const toml::table& t, const std::string& what) {
  const auto kind = t["kind"].value<std::string>();
  if (!kind) throw config_error(what + ".kind is required");
  try {
    if (*kind == "half_space")
      return Domain::half_space(vector_of(t.get("normal"), what + ".normal"), scalar_of(t, "offset", what));
    if (*kind == "ball")
      return Domain::ball(vector_of(t.get("center"), what + ".center"), scalar_of(t, "radius", what));
    if (*kind == "box") return Domain::box(vector_of(t.get("lo"), what + ".lo"), vector_of(t.get("hi"), what + ".hi"));
    if (*kind == "whole_space") {
      const auto dim = t["dim"].value<int64_t>();
      if (!dim) throw config_error(what + ".dim is required for whole_space");
      return Domain::whole_space(static_cast<int>(*dim));
    }
    if (*kind == "complement") {
      const toml::table* inner = t["inner"].as_table();
      if (!inner) throw config_error(what + ".inner must be a table");
      return Domain::complement(domain_of(*inner, what + ".inner"));
    }
  } catch (const Error& e) {
    if (e.kind() == Error::Kind::config) throw;
    throw config_error(what + ": " + e.what());
  }
  throw config_error("unknown domain kind: " + *kind);
}

template <class T>
T positive_integer(const toml::node& n, const std::string& what) {
  const auto v = n.value<int64_t>();
  if (!v || *v <= 0) throw config_error(what + " must be a positive integer");
  return static_cast<T>(*v);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config parse error at line " << e.source().begin.line << ": " << e.description();
    throw config_error(os.str());
  }
  static const std::vector<std::string> known{"seed", "jobs", "out", "model", "domain", "run", "limits"};
  for (const auto& [key, _] : root)
    if (std::find(known.begin(), known.end(), std::string(key.str())) == known.end())
      throw config_error("unknown config key: " + std::string(key.str()));

  ExperimentConfig cfg;
  cfg.source = text;
  if (const toml::node* n = root.get("seed")) {
    const auto v = n->value<int64_t>();
    if (!v || *v < 0) throw config_error("seed must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(*v);
  }
  if (const toml::node* n = root.get("jobs")) cfg.jobs = positive_integer<int>(*n, "jobs");
  if (const toml::node* n = root.get("out")) {
    const auto v = n->value<std::string>();
    if (!v || v->empty()) throw config_error("out must be a non-empty string");
    cfg.out = *v;
  }
  if (const toml::node* n = root.get("model")) {
    const toml::table* t = n->as_table();
    if (!t) throw config_error("[model] must be a table");
    cfg.a = matrix_of(t->get("a"));
  }
  if (const toml::node* n = root.get("domain")) {
    const toml::table* t = n->as_table();
    if (!t) throw config_error("[domain] must be a table");
    cfg.domain = domain_of(*t, "domain");
  }
  if (const toml::node* n = root.get("run")) {
    const toml::table* t = n->as_table();
    if (!t) throw config_error("[run] must be a table");
    if (const toml::node* s = t->get("suite")) {
      const auto v = s->value<std::string>();
      if (!v) throw config_error("run.suite must be a string");
      cfg.suite = *v;
    }
    if (const toml::node* c = t->get("checks")) {
      const toml::array* arr = c->as_array();
      if (!arr) throw config_error("run.checks must be an array of strings");
      for (const toml::node& e : *arr) {
        const auto v = e.value<std::string>();
        if (!v) throw config_error("run.checks must be an array of strings");
        if (!is_known_check(*v)) throw config_error("unknown check id: " + *v);
        cfg.checks.push_back(*v);
      }
    }
  }
  if (const toml::node* n = root.get("limits")) {
    const toml::table* t = n->as_table();
    if (!t) throw config_error("[limits] must be a table");
    if (const toml::node* v = t->get("max_paths")) cfg.limits.max_paths = positive_integer<std::size_t>(*v, "limits.max_paths");
    if (const toml::node* v = t->get("max_grid_nodes"))
      cfg.limits.max_grid_nodes = positive_integer<long>(*v, "limits.max_grid_nodes");
    if (const toml::node* v = t->get("wall_clock_seconds")) {
      cfg.limits.wall_clock_seconds = number(*v, "limits.wall_clock_seconds");
      if (!(cfg.limits.wall_clock_seconds > 0.0)) throw config_error("limits.wall_clock_seconds must be positive");
    }
  }
  if (cfg.a && cfg.domain && cfg.domain->dim() != cfg.a->rows())
    throw config_error("domain dimension does not match model.a");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

}  // namespace oulab
