#include "oulab/report.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "oulab/errors.hpp"

namespace oulab {

namespace {

using nlohmann::json;

std::string num(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += num(v[i]);
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

json nullable(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isnan(x) ? json(nullptr) : json(x));
  return a;
}

json domain_json(const Domain& d) {
  json j;
  switch (d.kind()) {
    case Domain::Kind::half_space:
      j = {{"kind", "half_space"}, {"normal", std::vector<double>(d.normal().begin(), d.normal().end())}, {"offset", d.offset()}};
      break;
    case Domain::Kind::ball:
      j = {{"kind", "ball"}, {"center", std::vector<double>(d.center().begin(), d.center().end())}, {"radius", d.radius()}};
      break;
    case Domain::Kind::box:
      j = {{"kind", "box"}, {"lo", std::vector<double>(d.lo().begin(), d.lo().end())}, {"hi", std::vector<double>(d.hi().begin(), d.hi().end())}};
      break;
    case Domain::Kind::complement:
      j = {{"kind", "complement"}, {"inner", domain_json(d.inner())}};
      break;
    case Domain::Kind::whole_space:
      j = {{"kind", "whole_space"}, {"dim", d.dim()}};
      break;
  }
  return j;
}

// ---------------------------------------------------------------- SVG

struct Curve {
  std::string label;
  std::vector<std::pair<double, double>> pts;
  bool line = true;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool xlog = false, ylog = false;
  std::vector<std::pair<std::string, std::string>> sources;  // (check_id, series)
  bool scatter = false;
};

PlotSpec plot_spec(const std::string& kind) {
  if (kind == "decay")
    return {"Decay", "t", "value", false, true,
            {{"kill.eigen", "survival"}, {"kill.eigen", "value"}, {"sg.ergodic", "norm"}, {"sg.ergodic", "exact"}}};
  if (kind == "scan")
    return {"Resolvent norms", "t or lambda", "norm", true, false,
            {{"grid.bisector", "energy"}, {"grid.bisector", "product"}, {"grid.ndr", "norm"}, {"grid.gradres", "norm"}}};
  if (kind == "spectrum")
    return {"Spectrum", "Re", "Im", false, false, {{"grid.poincare.whole", "eigenvalue"}}, true};
  if (kind == "sweep") return {"Penalization gap", "eps", "gap", true, false, {{"pen.sweep", "gap"}}};
  throw config_error("unknown plot kind: " + kind);
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string git_blob_sha1(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char md[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), md);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char b : md) {
    out += hex[b >> 4];
    out += hex[b & 15];
  }
  return out;
}

std::string suite_canonical_json(const Suite& s) {
  json j;
  j["suite"] = s.name;
  json a = json::array();
  for (Eigen::Index i = 0; i < s.a.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < s.a.cols(); ++k) row.push_back(s.a(i, k));
    a.push_back(row);
  }
  j["a"] = a;
  j["domain"] = s.domain ? domain_json(*s.domain) : json(nullptr);
  std::vector<std::string> checks = s.checks;
  std::sort(checks.begin(), checks.end());
  j["checks"] = checks;
  j["seed"] = s.seed;
  j["sample_scale"] = s.sample_scale;
  j["limits"] = {{"max_paths", s.limits.max_paths},
                 {"max_grid_nodes", s.limits.max_grid_nodes},
                 {"wall_clock_seconds", s.limits.wall_clock_seconds}};
  return j.dump();
}

std::string provenance_line(const std::string& config_hash) {
  return std::string("# oulab ") + OULAB_VERSION + " config=" + config_hash;
}

void write_results_csv(std::ostream& out, const SuiteReport& rep, const std::string& config_hash) {
  out << provenance_line(config_hash) << "\n";
  out << "check_id,anchor,measured,bound,tol,verdict,seconds\n";
  for (const CheckResult& r : rep.results) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.3f", r.seconds);
    out << csv_field(r.id) << ',' << csv_field(r.anchor) << ',' << join(r.measured) << ',' << join(r.bound)
        << ',' << join(r.tol) << ',' << verdict_name(r.verdict) << ',' << secs << "\n";
  }
}

void write_series_csv(std::ostream& out, const SuiteReport& rep, const std::string& config_hash) {
  out << provenance_line(config_hash) << "\n";
  out << "check_id,series,x,y,y_err\n";
  for (const SeriesPoint& p : rep.series)
    out << p.check_id << ',' << p.series << ',' << num(p.x) << ',' << num(p.y) << ',' << num(p.y_err) << "\n";
}

void write_summary_json(std::ostream& out, const Suite& s, const SuiteReport& rep, const std::string& config_hash) {
  json j;
  j["tool"] = "oulab";
  j["version"] = OULAB_VERSION;
  j["config_hash"] = config_hash;
  j["suite"] = json::parse(suite_canonical_json(s));
  json checks = json::array();
  std::map<std::string, int> counts;
  for (const CheckResult& r : rep.results) {
    ++counts[verdict_name(r.verdict)];
    checks.push_back({{"id", r.id},
                      {"anchor", r.anchor},
                      {"measured", nullable(r.measured)},
                      {"bound", nullable(r.bound)},
                      {"tol", nullable(r.tol)},
                      {"verdict", verdict_name(r.verdict)},
                      {"detail", r.detail},
                      {"rerun", r.rerun}});
  }
  j["checks"] = checks;
  j["counts"] = counts;
  out << j.dump(2) << "\n";
}

std::vector<SeriesPoint> read_series_csv(std::istream& in) {
  std::vector<SeriesPoint> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      if (line.rfind("check_id,series", 0) != 0) throw config_error("not a series CSV (bad header)");
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw config_error("malformed series row: " + line);
    SeriesPoint p;
    p.check_id = f[0];
    p.series = f[1];
    try {
      p.x = std::stod(f[2]);
      p.y = std::stod(f[3]);
      p.y_err = f[4].empty() ? 0.0 : std::stod(f[4]);
    } catch (const std::exception&) {
      throw config_error("malformed series row: " + line);
    }
    out.push_back(p);
  }
  return out;
}

bool is_plot_kind(const std::string& kind) {
  return kind == "decay" || kind == "scan" || kind == "spectrum" || kind == "sweep";
}

std::string render_svg(const std::string& kind, const std::vector<SeriesPoint>& series, const std::string& provenance) {
  const PlotSpec spec = plot_spec(kind);
  std::vector<Curve> curves;
  for (const auto& [check, name] : spec.sources) {
    Curve c{check + ":" + name, {}, !spec.scatter};
    for (const SeriesPoint& p : series) {
      if (p.check_id != check || p.series != name) continue;
      if ((spec.xlog && !(p.x > 0)) || (spec.ylog && !(p.y > 0))) continue;
      c.pts.emplace_back(spec.xlog ? std::log10(p.x) : p.x, spec.ylog ? std::log10(p.y) : p.y);
    }
    if (!c.pts.empty()) curves.push_back(std::move(c));
  }

  const double W = 640, H = 420, left = 70, right = 170, top = 40, bottom = 50;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<!-- " << esc(provenance.substr(2)) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << esc(spec.title) << "</text>\n";
  if (curves.empty()) {
    os << "<text x=\"" << W / 2 << "\" y=\"" << H / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">no data</text>\n</svg>\n";
    return os.str();
  }
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Curve& c : curves)
    for (const auto& [x, y] : c.pts) {
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (spec.scatter) {
    y0 = std::min(y0, -1.0);
    y1 = std::max(y1, 1.0);
  }
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double padx = 0.04 * (x1 - x0), pady = 0.06 * (y1 - y0);
  x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;
  const double pw = W - left - right, ph = H - top - bottom;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto tick_label = [](double v, bool logscale) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", logscale ? std::pow(10.0, v) : v);
    return std::string(buf);
  };
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << sx(xv) << "\" y=\"" << top + ph + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(xv, spec.xlog) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(yv, spec.ylog) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << esc(spec.xlabel)
     << (spec.xlog ? " (log)" : "") << "</text>\n";
  os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << esc(spec.ylabel)
     << (spec.ylog ? " (log)" : "") << "</text>\n";

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const Curve& c = curves[i];
    const char* col = colors[i % 5];
    if (c.line && c.pts.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : c.pts) os << sx(x) << ',' << sy(y) << ' ';
      os << "\"/>\n";
    }
    for (const auto& [x, y] : c.pts)
      os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"2.5\" fill=\"" << col << "\"/>\n";
    const double ly = top + 14 + 18.0 * i;
    os << "<rect x=\"" << W - right + 12 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\"" << col
       << "\"/>\n";
    os << "<text x=\"" << W - right + 28 << "\" y=\"" << ly + 1 << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << esc(c.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace oulab
