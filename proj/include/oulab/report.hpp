#pragma once

// Result files: results.csv, series.csv, summary.json and SVG plots.

#include <iosfwd>
#include <string>
#include <vector>

#include "oulab/harness.hpp"

namespace oulab {

/// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_sha1(const std::string& content);

/// Canonical JSON text of the effective suite; its blob hash identifies a run.
std::string suite_canonical_json(const Suite& s);

/// "# oulab <version> config=<hash>"
std::string provenance_line(const std::string& config_hash);

/// Columns: check_id, anchor, measured, bound, tol, verdict, seconds.
/// Multi-valued cells are ';'-separated; missing values are empty.
void write_results_csv(std::ostream& out, const SuiteReport& rep, const std::string& config_hash);
void write_series_csv(std::ostream& out, const SuiteReport& rep, const std::string& config_hash);
void write_summary_json(std::ostream& out, const Suite& s, const SuiteReport& rep,
                        const std::string& config_hash);

/// Reads series.csv; comment lines are skipped.
std::vector<SeriesPoint> read_series_csv(std::istream& in);

/// Plot kinds: decay, scan, spectrum, sweep.
bool is_plot_kind(const std::string& kind);
std::string render_svg(const std::string& kind, const std::vector<SeriesPoint>& series,
                       const std::string& provenance);

}  // namespace oulab
