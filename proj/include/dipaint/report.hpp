#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dipaint/metrics.hpp"

namespace dipaint {

inline constexpr const char* kOriginalImageLabel = "Original Image";

// A report row; `error` set means the method failed and the metrics are
// meaningless.
struct ReportRow {
  MetricRow metrics;
  std::optional<std::string> error;
};

struct ReportTable {
  std::vector<ReportRow> rows;
};

namespace report_detail {

inline std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

}  // namespace report_detail

// Exact 0 and 1 print bare so the self-row reads "1 0 0 inf".
inline std::string format_metric(double v, const char* pattern) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";
  if (v == 1.0) return "1";
  return report_detail::fmt(pattern, v);
}

inline std::vector<std::string> row_cells(const ReportRow& r) {
  if (r.error) return {r.metrics.label, "failed", "failed", "failed", "failed"};
  const MetricRow& m = r.metrics;
  return {m.label, format_metric(m.ssim, "%.4f"), format_metric(m.nrmse, "%.3e"),
          format_metric(m.mse, "%.3e"), format_metric(m.psnr, "%.2f")};
}

// Aligned plain-text table: Model | SSIM | NRMSE | MSE | PSNR.
inline std::string format_table(const ReportTable& table) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Model", "SSIM", "NRMSE", "MSE", "PSNR"});
  for (const auto& r : table.rows) cells.push_back(row_cells(r));
  std::vector<std::size_t> widths(5, 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << " | ";
      out << row[c];
      if (c + 1 < row.size()) out << std::string(widths[c] - row[c].size(), ' ');
    }
    out << '\n';
  };
  emit(cells[0]);
  for (std::size_t c = 0; c < widths.size(); ++c) {
    if (c > 0) out << "-+-";
    out << std::string(widths[c], '-');
  }
  out << '\n';
  for (std::size_t i = 1; i < cells.size(); ++i) emit(cells[i]);
  return out.str();
}

// psnr = +inf is written as the string "inf" (JSON has no infinity).
inline nlohmann::ordered_json to_json(const MetricRow& m) {
  nlohmann::ordered_json j;
  j["label"] = m.label;
  j["ssim"] = m.ssim;
  j["nrmse"] = m.nrmse;
  j["mse"] = m.mse;
  if (std::isinf(m.psnr)) j["psnr"] = "inf";
  else j["psnr"] = m.psnr;
  return j;
}

inline MetricRow metric_row_from_json(const nlohmann::ordered_json& j) {
  MetricRow m;
  m.label = j.at("label").get<std::string>();
  m.ssim = j.at("ssim").get<double>();
  m.nrmse = j.at("nrmse").get<double>();
  m.mse = j.at("mse").get<double>();
  const auto& p = j.at("psnr");
  m.psnr = p.is_string() ? std::numeric_limits<double>::infinity() : p.get<double>();
  return m;
}

// One JSON object per line, fields in table order. Failed rows carry
// "error" instead of metrics.
inline std::string format_jsonl(const ReportTable& table) {
  std::string out;
  for (const auto& r : table.rows) {
    nlohmann::ordered_json j;
    if (r.error) {
      j["label"] = r.metrics.label;
      j["error"] = *r.error;
    } else {
      j = to_json(r.metrics);
    }
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace dipaint
