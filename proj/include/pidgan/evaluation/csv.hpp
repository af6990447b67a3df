#pragma once

// Metrics CSV: one row per (experiment, method, mode, seed, noise).
//
// Columns: experiment, method, mode, seed, noise, rel_l2, rel_l2_u, rel_l2_k,
// rmse, residual, std, ci95, config_hash, dataset_fingerprint. rel_l2_k is
// empty unless the model predicts a coefficient field. Numbers are written
// with 17 significant digits so they round-trip exactly.

#include "pidgan/evaluation/metrics.hpp"

#include <cstdio>
#include <map>
#include <sstream>

namespace pidgan::evaluation {

struct MetricsRow {
  std::string experiment, method, mode;
  std::uint64_t seed = 0;
  double noise = 0.0;
  double rel_l2 = 0.0, rel_l2_u = 0.0;
  std::optional<double> rel_l2_k;
  double rmse = 0.0, residual = 0.0, std = 0.0, ci95 = 0.0;
  std::string config_hash, dataset_fingerprint;
};

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> c{"experiment", "method",   "mode", "seed", "noise",       "rel_l2",
                                          "rel_l2_u",   "rel_l2_k", "rmse", "residual", "std", "ci95",
                                          "config_hash", "dataset_fingerprint"};
  return c;
}

inline std::string csv_header() {
  std::string h;
  for (const auto& c : csv_columns()) h += (h.empty() ? "" : ",") + c;
  return h + "\n";
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline MetricsRow make_row(const UQReport& r) {
  MetricsRow row;
  row.rel_l2 = r.relative_l2_all;
  row.rel_l2_u = r.relative_l2.empty() ? 0.0 : r.relative_l2.front();
  row.rmse = r.rmse_all;
  row.residual = r.residual;
  row.std = r.mean_std;
  row.ci95 = r.ci95;
  return row;
}

inline std::string to_csv_line(const MetricsRow& r) {
  std::ostringstream s;
  s << r.experiment << ',' << r.method << ',' << r.mode << ',' << r.seed << ',' << format_number(r.noise) << ','
    << format_number(r.rel_l2) << ',' << format_number(r.rel_l2_u) << ','
    << (r.rel_l2_k ? format_number(*r.rel_l2_k) : "") << ',' << format_number(r.rmse) << ','
    << format_number(r.residual) << ',' << format_number(r.std) << ',' << format_number(r.ci95) << ','
    << r.config_hash << ',' << r.dataset_fingerprint << '\n';
  return s.str();
}

inline std::vector<MetricsRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line + "\n" != csv_header()) throw ValidationError("unexpected metrics CSV header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != csv_columns().size()) throw ValidationError("metrics CSV row has the wrong number of fields");
    MetricsRow r;
    r.experiment = f[0];
    r.method = f[1];
    r.mode = f[2];
    r.seed = std::stoull(f[3]);
    r.noise = std::stod(f[4]);
    r.rel_l2 = std::stod(f[5]);
    r.rel_l2_u = std::stod(f[6]);
    if (!f[7].empty()) r.rel_l2_k = std::stod(f[7]);
    r.rmse = std::stod(f[8]);
    r.residual = std::stod(f[9]);
    r.std = std::stod(f[10]);
    r.ci95 = std::stod(f[11]);
    r.config_hash = f[12];
    r.dataset_fingerprint = f[13];
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Mean and population std of one metric over repeated seeds.
struct Aggregate {
  double mean = 0.0, std = 0.0;
  int count = 0;
};

inline Aggregate aggregate(const std::vector<double>& v) {
  Aggregate a;
  a.count = static_cast<int>(v.size());
  if (v.empty()) return a;
  for (double x : v) a.mean += x;
  a.mean /= static_cast<double>(v.size());
  for (double x : v) a.std += (x - a.mean) * (x - a.mean);
  a.std = std::sqrt(a.std / static_cast<double>(v.size()));
  return a;
}

struct ReportCell {
  std::string experiment, method, mode;
  double noise = 0.0;
  std::map<std::string, Aggregate> metrics;
  std::vector<std::uint64_t> seeds;
};

/// Groups rows by (experiment, noise, method, mode) and aggregates every metric.
inline std::vector<ReportCell> build_report(const std::vector<MetricsRow>& rows) {
  std::map<std::tuple<std::string, double, std::string, std::string>, std::vector<const MetricsRow*>> groups;
  for (const auto& r : rows) groups[{r.experiment, r.noise, r.method, r.mode}].push_back(&r);
  std::vector<ReportCell> out;
  for (const auto& [key, members] : groups) {
    ReportCell c{std::get<0>(key), std::get<2>(key), std::get<3>(key), std::get<1>(key), {}, {}};
    std::map<std::string, std::vector<double>> cols;
    for (const auto* m : members) {
      c.seeds.push_back(m->seed);
      cols["rel_l2"].push_back(m->rel_l2);
      cols["rel_l2_u"].push_back(m->rel_l2_u);
      if (m->rel_l2_k) cols["rel_l2_k"].push_back(*m->rel_l2_k);
      cols["rmse"].push_back(m->rmse);
      cols["residual"].push_back(m->residual);
      cols["std"].push_back(m->std);
      cols["ci95"].push_back(m->ci95);
    }
    for (const auto& [name, v] : cols) c.metrics[name] = aggregate(v);
    out.push_back(std::move(c));
  }
  return out;
}

/// Markdown table, one row per method, "mean ± std" cells.
inline std::string report_markdown(const std::vector<ReportCell>& cells) {
  static const std::vector<std::pair<std::string, std::string>> shown{
      {"rel_l2_u", "Rel. L2 u"}, {"rel_l2_k", "Rel. L2 k"}, {"rmse", "RMSE"}, {"residual", "Residual"},
      {"std", "Std. Dev."},      {"ci95", "95% C.I."}};
  std::ostringstream s;
  std::string current;
  for (const auto& c : cells) {
    const std::string section = c.experiment + " (noise " + format_number(c.noise) + ")";
    if (section != current) {
      current = section;
      s << "\n### " << section << "\n\n| Method |";
      for (const auto& [k, label] : shown) s << ' ' << label << " |";
      s << " Seeds |\n|---|";
      for (std::size_t i = 0; i < shown.size(); ++i) s << "---|";
      s << "---|\n";
    }
    s << "| " << c.method << (c.mode == "imperfect" ? " (imperfect)" : "") << " |";
    for (const auto& [k, label] : shown) {
      auto it = c.metrics.find(k);
      if (it == c.metrics.end()) {
        s << " - |";
        continue;
      }
      char buf[64];
      std::snprintf(buf, sizeof buf, " %.4g ± %.3g |", it->second.mean, it->second.std);
      s << buf;
    }
    s << ' ' << c.seeds.size() << " |\n";
  }
  return s.str();
}

}  // namespace pidgan::evaluation
