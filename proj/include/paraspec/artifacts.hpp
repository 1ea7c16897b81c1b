#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "paraspec/conditions.hpp"
#include "paraspec/correlation_series.hpp"
#include "paraspec/spectral.hpp"

namespace paraspec {

// Writes `content` to `path` (creating parent directories) and returns the file name.
std::string write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);  // MissingArtifact if absent

// %.17g
std::string format_double(double v);

// CSV with a leading "# config_hash=..." line, optional further comment lines,
// then the header row and the data rows.
struct CsvTable {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
std::string render_csv(const CsvTable& table, const std::string& config_hash);

// correlation.csv: columns time,re,im,stderr; estimator and system in comments.
std::string render_correlation_csv(const CorrelationSeries& s, const std::string& config_hash);
// Inverse of render_correlation_csv. Throws InvalidSpec on malformed input.
CorrelationSeries parse_correlation_csv(const std::string& text);

// Comment value "key=value" from a rendered CSV, or empty.
std::string csv_comment_value(const std::string& text, const std::string& key);

std::string render_condition_report(const ConditionReport& r, const std::string& config_hash);

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};
// Line plot; log axes take log10 of positive values and drop the rest.
std::string render_svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                            const std::vector<SvgSeries>& series, bool log_x, bool log_y,
                            const std::string& config_hash);

}  // namespace paraspec
