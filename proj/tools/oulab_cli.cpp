#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "oulab/config.hpp"
#include "oulab/errors.hpp"
#include "oulab/harness.hpp"
#include "oulab/matkit.hpp"
#include "oulab/report.hpp"

namespace fs = std::filesystem;
using namespace oulab;

namespace {

enum Exit { kOk = 0, kCheckFailure = 1, kUsage = 2, kResources = 3 };

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::config:
    case Error::Kind::argument:
    case Error::Kind::stability:
    case Error::Kind::domain:
      return kUsage;
    case Error::Kind::capacity:
      return kResources;
    default:
      return kCheckFailure;
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw capacity_error("cannot write " + p.string());
  out << text;
}

std::string number_list(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i];
  return os.str();
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool svg = false;
  std::optional<std::string> out;
  std::string suite;
  std::vector<std::string> checks;
  std::string input;
  std::string kind;
};

ExperimentConfig read_config(const Options& o) {
  return o.config.empty() ? ExperimentConfig{} : load_config(o.config);
}

int cmd_model_info(const Options& o) {
  const ExperimentConfig cfg = read_config(o);
  Mat a;
  if (cfg.a) {
    a = *cfg.a;
  } else if (!o.suite.empty() || cfg.suite) {
    a = builtin_suite(o.suite.empty() ? *cfg.suite : o.suite).a;
  } else {
    throw config_error("model-info needs [model] a in the config or --suite");
  }
  const OUModel m = build_model(a);
  nlohmann::json j;
  auto mat = [](const Mat& x) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      std::vector<double> r(x.cols());
      for (Eigen::Index k = 0; k < x.cols(); ++k) r[k] = x(i, k);
      rows.push_back(r);
    }
    return rows;
  };
  Suite hashed;
  hashed.name = "model-info";
  hashed.a = a;
  const std::string hash = git_blob_sha1(suite_canonical_json(hashed));
  j["tool"] = "oulab";
  j["version"] = OULAB_VERSION;
  j["config_hash"] = hash;
  j["d"] = m.d;
  j["a"] = mat(m.a);
  j["q_inf"] = mat(m.q_inf);
  j["b"] = mat(m.b);
  j["b_alternative"] = mat(m.b_alternative);
  j["duality_residual"] = m.duality_residual;
  j["alternative_duality_residual"] = m.alternative_duality_residual;
  j["w"] = m.w;
  j["m_const"] = m.m_const;
  j["m_sup"] = m.m_sup;
  nlohmann::json spec = nlohmann::json::array();
  std::ostringstream eig;
  for (const Complex& z : spectrum(m.a).eigenvalues) {
    spec.push_back({{"re", z.real()}, {"im", z.imag()}});
    eig << " " << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  }
  j["spectrum"] = spec;

  const fs::path out = o.out.value_or(cfg.out);
  fs::create_directories(out);
  write_file(out / "model.json", j.dump(2) + "\n");
  std::cout << "d = " << m.d << "\nw = " << m.w << "\nM = " << m.m_const << "\nspectrum:" << eig.str()
            << "\nQ_inf =\n" << m.q_inf << "\nB =\n" << m.b << "\nwrote " << (out / "model.json").string() << "\n";
  return kOk;
}

int cmd_run(const Options& o) {
  const ExperimentConfig cfg = read_config(o);
  const std::string suite_name = !o.suite.empty() ? o.suite : cfg.suite.value_or("");
  Suite s;
  if (!suite_name.empty()) {
    s = builtin_suite(suite_name);
  } else {
    s.name = "custom";
  }
  if (cfg.a) {
    s.a = *cfg.a;
    if (!cfg.domain) s.domain.reset();
  }
  if (cfg.domain) s.domain = cfg.domain;
  if (s.a.size() == 0) throw config_error("no model: give --suite or [model] a in the config");
  if (s.domain && s.domain->dim() != s.a.rows()) throw config_error("domain dimension does not match the model");
  if (!o.checks.empty()) {
    s.checks = o.checks;
  } else if (!cfg.checks.empty()) {
    s.checks = cfg.checks;
  } else if (suite_name.empty()) {
    throw config_error("nothing to run: give --suite, --check or run.checks");
  }
  for (const std::string& id : s.checks)
    if (!is_known_check(id)) throw config_error("unknown check id: " + id);
  if (o.seed) {
    s.seed = *o.seed;
  } else if (cfg.seed) {
    s.seed = *cfg.seed;
  } else {
    throw config_error("a seed is required (--seed or seed = ... in the config)");
  }
  s.jobs = o.jobs.value_or(cfg.jobs.value_or(1));
  s.limits = cfg.limits;

  const std::string hash = git_blob_sha1(suite_canonical_json(s));
  const SuiteReport rep = run_suite(s);

  const fs::path out = o.out.value_or(cfg.out);
  fs::create_directories(out);
  std::ostringstream results, series, summary;
  write_results_csv(results, rep, hash);
  write_series_csv(series, rep, hash);
  write_summary_json(summary, s, rep, hash);
  write_file(out / "results.csv", results.str());
  write_file(out / "series.csv", series.str());
  write_file(out / "summary.json", summary.str());
  if (o.svg)
    for (const char* kind : {"decay", "scan", "spectrum", "sweep"})
      write_file(out / (std::string(kind) + ".svg"), render_svg(kind, rep.series, provenance_line(hash)));

  for (const CheckResult& r : rep.results) {
    std::printf("%-22s %-13s %8.2fs  measured=%s bound=%s%s\n", r.id.c_str(), verdict_name(r.verdict).c_str(),
                r.seconds, number_list(r.measured).c_str(), number_list(r.bound).c_str(),
                r.rerun ? "  (rerun with 4x samples)" : "");
    if (!r.detail.empty()) std::printf("    %s\n", r.detail.c_str());
  }
  std::printf("config=%s results in %s\n", hash.c_str(), out.string().c_str());
  if (rep.any_resource()) return kResources;
  return rep.any_failed() ? kCheckFailure : kOk;
}

int cmd_plot(const Options& o) {
  if (!is_plot_kind(o.kind)) throw config_error("unknown plot kind: " + o.kind);
  fs::path input = o.input;
  if (fs::is_directory(input)) input /= "series.csv";
  if (!fs::exists(input)) throw config_error("input not found: " + input.string());
  // A results.csv points at the series file written next to it.
  if (input.filename() == "results.csv") input = input.parent_path() / "series.csv";
  std::vector<SeriesPoint> pts;
  std::string provenance = "# oulab " OULAB_VERSION " config=unknown";
  if (fs::exists(input)) {
    std::ifstream in(input);
    std::string first;
    if (std::getline(in, first) && first.rfind("# oulab", 0) == 0) provenance = first;
    in.clear();
    in.seekg(0);
    pts = read_series_csv(in);
  }
  const std::string svg = render_svg(o.kind, pts, provenance);
  if (svg.find("no data") != std::string::npos)
    std::cerr << "warning: no data for plot kind '" << o.kind << "'; writing an empty plot\n";
  const fs::path out = o.out.value_or(".");
  fs::create_directories(out);
  const fs::path file = out / (o.kind + ".svg");
  write_file(file, svg);
  std::cout << "wrote " << file.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oulab: numerical checks for Ornstein-Uhlenbeck semigroups on domains"};
  app.set_version_flag("--version", std::string(OULAB_VERSION));
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "TOML experiment config")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
  };
  CLI::App* info = app.add_subcommand("model-info", "report Q_inf, B, w, M and the spectrum of A");
  add_common(info);
  info->add_option("--suite", o.suite, "take the model of a built-in suite");

  CLI::App* run = app.add_subcommand("run", "run a suite or individual checks");
  add_common(run);
  run->add_option("--suite", o.suite, "built-in suite: symmetric-1d, rotation-2d");
  run->add_option("--check", o.checks, "check id (repeatable)");
  run->add_option("--seed", o.seed, "random seed");
  run->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--svg", o.svg, "also write SVG plots");

  CLI::App* plot = app.add_subcommand("plot", "draw an SVG from a previous run");
  plot->add_option("--input", o.input, "results.csv, series.csv or a run directory")->required();
  plot->add_option("--kind", o.kind, "decay, scan, spectrum or sweep")->required();
  plot->add_option("--out", o.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (info->parsed()) return cmd_model_info(o);
    if (run->parsed()) return cmd_run(o);
    return cmd_plot(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kResources;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return kResources;
  }
}
