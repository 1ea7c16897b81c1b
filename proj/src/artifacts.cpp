#include "paraspec/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "paraspec/errors.hpp"

namespace paraspec {

using ojson = nlohmann::ordered_json;

std::string write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidSpec("cannot write " + path.string());
  out << content;
  if (!out) throw InvalidSpec("write failed: " + path.string());
  return path.filename().string();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("missing artifact: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string render_csv(const CsvTable& table, const std::string& config_hash) {
  std::string out = "# config_hash=" + config_hash + "\n";
  for (const auto& c : table.comments) out += "# " + c + "\n";
  auto row = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  row(table.header);
  for (const auto& r : table.rows) row(r);
  return out;
}

std::string render_correlation_csv(const CorrelationSeries& s, const std::string& config_hash) {
  CsvTable t;
  t.comments.push_back("method=" + s.estimator.method);
  t.comments.push_back("samples=" + std::to_string(s.estimator.samples));
  t.comments.push_back("seed=" + std::to_string(s.estimator.seed));
  t.comments.push_back("grid_log2=" + std::to_string(s.estimator.grid_log2));
  t.comments.push_back("system=" + s.system_desc);
  t.header = {"time", "re", "im", "stderr"};
  for (std::size_t i = 0; i < s.size(); ++i)
    t.rows.push_back({format_double(s.times[i]), format_double(s.values[i].real()), format_double(s.values[i].imag()),
                      format_double(i < s.std_error.size() ? s.std_error[i] : 0.0)});
  return render_csv(t, config_hash);
}

std::string csv_comment_value(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  const std::string prefix = "# " + key + "=";
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '#') break;
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
  }
  return "";
}

CorrelationSeries parse_correlation_csv(const std::string& text) {
  CorrelationSeries s;
  s.estimator.method = csv_comment_value(text, "method");
  try {
    s.estimator.samples = std::stol(csv_comment_value(text, "samples"));
    s.estimator.seed = std::stoull(csv_comment_value(text, "seed"));
    s.estimator.grid_log2 = std::stoi(csv_comment_value(text, "grid_log2"));
  } catch (const std::exception&) {
    throw InvalidSpec("correlation.csv: malformed estimator comments");
  }
  s.system_desc = csv_comment_value(text, "system");
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "time,re,im,stderr") throw InvalidSpec("correlation.csv: header must be time,re,im,stderr");
      header_seen = true;
      continue;
    }
    double v[4];
    std::istringstream ls(line);
    std::string cell;
    for (int c = 0; c < 4; ++c) {
      if (!std::getline(ls, cell, ',')) throw InvalidSpec("correlation.csv: short row at line " + std::to_string(line_no));
      try {
        v[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw InvalidSpec("correlation.csv: bad number at line " + std::to_string(line_no));
      }
    }
    s.times.push_back(v[0]);
    s.values.emplace_back(v[1], v[2]);
    s.std_error.push_back(v[3]);
  }
  if (!header_seen) throw InvalidSpec("correlation.csv: no header row");
  return s;
}

namespace {

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson array_of(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(number_or_null(x));
  return a;
}

ojson condition_json(const ConditionResult& r) {
  ojson j;
  j["verdict"] = to_string(r.verdict);
  j["estimate"] = number_or_null(r.estimate);
  j["paper_bound"] = r.paper_bound ? number_or_null(*r.paper_bound) : ojson(nullptr);
  j["refinement_delta"] = number_or_null(r.refinement_delta);
  j["rule"] = r.rule;
  ojson p;
  p["beta"] = r.profile.beta;
  p["times"] = array_of(r.profile.times);
  p["multiplier_sup"] = array_of(r.profile.multiplier_sup);
  p["multiplier_sup_half"] = array_of(r.profile.multiplier_sup_half);
  j["profile"] = p;
  ojson s;
  s["seed"] = r.profile.sample_meta.seed;
  s["n_samples"] = r.profile.sample_meta.n_samples;
  s["stream"] = r.profile.sample_meta.stream;
  j["samples"] = s;
  return j;
}

}  // namespace

std::string render_condition_report(const ConditionReport& r, const std::string& config_hash) {
  ojson j;
  j["config_hash"] = config_hash;
  j["system"] = r.system_desc;
  j["b1"] = r.b1_desc;
  j["b2"] = r.b2_desc;
  ojson conds;
  conds["i"] = condition_json(r.condition_i);
  conds["ii"] = condition_json(r.condition_ii);
  conds["iii"] = condition_json(r.condition_iii);
  j["conditions"] = conds;
  if (r.kushnirenko) {
    ojson k;
    k["raw_sup"] = r.kushnirenko->raw_sup;
    k["sup_estimate"] = r.kushnirenko->sup_estimate;
    k["spread"] = r.kushnirenko->spread;
    k["verdict"] = r.kushnirenko->pass ? "PASS" : "FAIL";
    k["n_samples"] = r.kushnirenko->n_samples;
    k["seed"] = r.kushnirenko->seed;
    j["kushnirenko"] = k;
  } else {
    j["kushnirenko"] = nullptr;
  }
  j["caveats"] = r.caveats;
  j["consistent"] = r.consistent;
  j["overall"] = r.overall;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// SVG

std::string render_svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                            const std::vector<SvgSeries>& series, bool log_x, bool log_y,
                            const std::string& config_hash) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::vector<std::vector<std::pair<double, double>>> pts(series.size());
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t i = 0; i < std::min(series[s].x.size(), series[s].y.size()); ++i) {
      double x = series[s].x[i], y = series[s].y[i];
      if (log_x) {
        if (!(x > 0.0)) continue;
        x = std::log10(x);
      }
      if (log_y) {
        if (!(y > 0.0)) continue;
        y = std::log10(y);
      }
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      pts[s].emplace_back(x, y);
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) {
    x0 = std::isfinite(x0) ? x0 - 1 : 0;
    x1 = x0 + 2;
  }
  if (!(y1 > y0)) {
    y0 = std::isfinite(y0) ? y0 - 1 : 0;
    y1 = y0 + 2;
  }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n", W, H,
                W, H);
  out += buf;
  out += "<!-- config_hash=" + config_hash + " -->\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", L, T,
                W - L - R, H - T - B);
  out += buf;
  auto text = [&](double x, double y, const std::string& s, const char* anchor, int size) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"%d\" "
                  "text-anchor=\"%s\">", x, y, size, anchor);
    out += buf;
    for (char ch : s) {
      if (ch == '<') out += "&lt;";
      else if (ch == '>') out += "&gt;";
      else if (ch == '&') out += "&amp;";
      else out += ch;
    }
    out += "</text>\n";
  };
  text(W / 2, 24, title, "middle", 15);
  text(W / 2, H - 12, log_x ? "log10 " + x_label : x_label, "middle", 12);
  std::snprintf(buf, sizeof buf, "<g transform=\"translate(16,%g) rotate(-90)\">\n", H / 2);
  out += buf;
  text(0, 0, log_y ? "log10 " + y_label : y_label, "middle", 12);
  out += "</g>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    std::snprintf(buf, sizeof buf, "%.3g", xv);
    text(px(xv), H - B + 16, buf, "middle", 10);
    std::snprintf(buf, sizeof buf, "%.3g", yv);
    text(L - 6, py(yv) + 4, buf, "end", 10);
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    if (pts[s].empty()) continue;
    std::string d;
    for (std::size_t i = 0; i < pts[s].size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f %.2f", i ? " L" : "M", px(pts[s][i].first), py(pts[s][i].second));
      d += buf;
    }
    std::snprintf(buf, sizeof buf, "<path fill=\"none\" stroke-width=\"1.2\" stroke=\"%s\" d=\"", colors[s % 4]);
    out += buf;
    out += d + "\"/>\n";
    text(W - R - 6, T + 16 + 14.0 * static_cast<double>(s), series[s].label, "end", 11);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace paraspec
