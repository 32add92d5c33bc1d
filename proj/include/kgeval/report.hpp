#pragma once

// Protocol comparison rows: RANDOM mean +- std next to TOP and BOTTOM with
// their deltas against RANDOM, rendered as markdown, CSV or JSON.

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgeval/error.hpp"
#include "kgeval/protocols.hpp"

namespace kgeval {

enum class Sensitivity : std::uint8_t { kNonAffected, kAffected };

inline const char* to_string(Sensitivity s) {
  return s == Sensitivity::kAffected ? "affected" : "non-affected";
}

// Externally supplied numbers, e.g. from a publication. Never computed here.
struct ReportedMetrics {
  double mrr = 0.0;
  double mr = 0.0;
  double hits10 = 0.0;
};

inline constexpr int kReportHitsCutoff = 10;
inline constexpr double kDefaultSensitivityThreshold = 0.01;

struct ComparisonRow {
  std::string model;
  std::optional<ReportedMetrics> reported;
  Metrics random_mean;
  Metrics random_std;
  std::size_t random_seeds = 0;
  Metrics top;
  Metrics bottom;

  double delta_top_mrr() const { return top.mrr - random_mean.mrr; }
  double delta_top_mr() const { return top.mr - random_mean.mr; }
  double delta_top_hits() const {
    return top.hits_at(kReportHitsCutoff) - random_mean.hits_at(kReportHitsCutoff);
  }
  double delta_bottom_mrr() const { return bottom.mrr - random_mean.mrr; }
  double delta_bottom_mr() const { return bottom.mr - random_mean.mr; }
  double delta_bottom_hits() const {
    return bottom.hits_at(kReportHitsCutoff) - random_mean.hits_at(kReportHitsCutoff);
  }
};

// Affected iff |MRR_TOP - MRR_BOTTOM| > threshold (strict).
inline Sensitivity classify_sensitivity(const ComparisonRow& row,
                                        double threshold = kDefaultSensitivityThreshold) {
  return std::abs(row.top.mrr - row.bottom.mrr) > threshold ? Sensitivity::kAffected
                                                            : Sensitivity::kNonAffected;
}

inline ComparisonRow comparison_row(const EvalReport& r, std::string model = {},
                                    std::optional<ReportedMetrics> reported = std::nullopt) {
  for (Protocol p : {Protocol::kTop, Protocol::kBottom, Protocol::kRandom}) {
    if (!r.has(p)) throw Error(std::string("comparison row needs a ") + to_string(p) + " result");
  }
  ComparisonRow row;
  row.model = model.empty() ? r.model : std::move(model);
  row.reported = reported;
  const auto& rnd = r.result(Protocol::kRandom);
  row.random_mean = rnd.summary.mean;
  row.random_std = rnd.summary.stddev;
  row.random_seeds = rnd.per_seed.size();
  row.top = r.result(Protocol::kTop).summary.mean;
  row.bottom = r.result(Protocol::kBottom).summary.mean;
  row.top.hits_at(kReportHitsCutoff);  // throws when H@10 was not computed
  return row;
}

// ---------------------------------------------------------------------------
// Number formatting: fractions to 3 decimals without the leading zero
// (".407"), mean ranks to the nearest integer, deltas always signed.

namespace fmt_detail {

inline std::string printf_str(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

inline std::string strip_leading_zero(std::string s) {
  const std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (s.size() > i + 1 && s[i] == '0' && s[i + 1] == '.') s.erase(i, 1);
  return s;
}

// Rounded zero prints as "+", never "-".
inline std::string signed_fixed(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  if (std::round(std::abs(v) * scale) == 0.0) v = 0.0;
  char pattern[16];
  std::snprintf(pattern, sizeof pattern, "%%+.%df", decimals);
  return printf_str(pattern, v);
}

}  // namespace fmt_detail

inline std::string format_fraction(double v) {
  return fmt_detail::strip_leading_zero(fmt_detail::printf_str("%.3f", v));
}
inline std::string format_std(double v) {
  return fmt_detail::strip_leading_zero(fmt_detail::printf_str("%.4f", v));
}
inline std::string format_rank(double v) { return fmt_detail::printf_str("%.0f", v); }
inline std::string format_fraction_delta(double v) {
  return fmt_detail::strip_leading_zero(fmt_detail::signed_fixed(v, 3));
}
inline std::string format_rank_delta(double v) { return fmt_detail::signed_fixed(v, 0); }

enum class ReportFormat : std::uint8_t { kMarkdown, kCsv, kJson };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "json") return ReportFormat::kJson;
  throw Error("unknown report format '" + std::string(s) + "'");
}

namespace detail {

inline bool any_reported(const std::vector<ComparisonRow>& rows) {
  for (const auto& r : rows) {
    if (r.reported) return true;
  }
  return false;
}

inline std::string render_markdown(const std::vector<ComparisonRow>& rows, double threshold) {
  const bool reported = any_reported(rows);
  std::ostringstream out;
  out << "| Model |";
  if (reported) out << " Reported (external) MRR ↑ | Reported MR ↓ | Reported H@10 ↑ |";
  out << " RANDOM MRR ↑ | RANDOM MR ↓ | RANDOM H@10 ↑ | TOP MRR ↑ | TOP MR ↓ | TOP H@10 ↑ |"
         " BOTTOM MRR ↑ | BOTTOM MR ↓ | BOTTOM H@10 ↑ | Sensitivity |\n";
  out << "|---|";
  if (reported) out << "---:|---:|---:|";
  out << "---:|---:|---:|---:|---:|---:|---:|---:|---:|---|\n";
  for (const auto& r : rows) {
    const double rh = r.random_mean.hits_at(kReportHitsCutoff);
    const double rh_sd = r.random_std.hits_at(kReportHitsCutoff);
    out << "| " << r.model << " |";
    if (reported) {
      if (r.reported) {
        out << ' ' << format_fraction(r.reported->mrr) << " | " << format_rank(r.reported->mr)
            << " | " << format_fraction(r.reported->hits10) << " |";
      } else {
        out << " - | - | - |";
      }
    }
    out << ' ' << format_fraction(r.random_mean.mrr) << " ± " << format_std(r.random_std.mrr)
        << " | " << format_rank(r.random_mean.mr) << " ± " << format_rank(r.random_std.mr)
        << " | " << format_fraction(rh) << " ± " << format_std(rh_sd) << " |";
    out << ' ' << format_fraction(r.top.mrr) << " (" << format_fraction_delta(r.delta_top_mrr())
        << ") | " << format_rank(r.top.mr) << " (" << format_rank_delta(r.delta_top_mr()) << ") | "
        << format_fraction(r.top.hits_at(kReportHitsCutoff)) << " ("
        << format_fraction_delta(r.delta_top_hits()) << ") |";
    out << ' ' << format_fraction(r.bottom.mrr) << " ("
        << format_fraction_delta(r.delta_bottom_mrr()) << ") | " << format_rank(r.bottom.mr)
        << " (" << format_rank_delta(r.delta_bottom_mr()) << ") | "
        << format_fraction(r.bottom.hits_at(kReportHitsCutoff)) << " ("
        << format_fraction_delta(r.delta_bottom_hits()) << ") |";
    out << ' ' << to_string(classify_sensitivity(r, threshold)) << " |\n";
  }
  return out.str();
}

inline std::string plain3(double v) { return fmt_detail::printf_str("%.3f", v); }
inline std::string plain4(double v) { return fmt_detail::printf_str("%.4f", v); }

inline std::string render_csv(const std::vector<ComparisonRow>& rows, double threshold) {
  std::ostringstream out;
  out << "model,sensitivity,reported_mrr,reported_mr,reported_h10,"
         "random_mrr,random_mrr_std,random_mr,random_mr_std,random_h10,random_h10_std,"
         "top_mrr,top_mrr_delta,top_mr,top_mr_delta,top_h10,top_h10_delta,"
         "bottom_mrr,bottom_mrr_delta,bottom_mr,bottom_mr_delta,bottom_h10,bottom_h10_delta\n";
  for (const auto& r : rows) {
    out << r.model << ',' << to_string(classify_sensitivity(r, threshold)) << ',';
    if (r.reported) {
      out << plain3(r.reported->mrr) << ',' << format_rank(r.reported->mr) << ','
          << plain3(r.reported->hits10) << ',';
    } else {
      out << ",,,";
    }
    out << plain3(r.random_mean.mrr) << ',' << plain4(r.random_std.mrr) << ','
        << format_rank(r.random_mean.mr) << ',' << format_rank(r.random_std.mr) << ','
        << plain3(r.random_mean.hits_at(kReportHitsCutoff)) << ','
        << plain4(r.random_std.hits_at(kReportHitsCutoff)) << ',';
    out << plain3(r.top.mrr) << ',' << fmt_detail::signed_fixed(r.delta_top_mrr(), 3) << ','
        << format_rank(r.top.mr) << ',' << format_rank_delta(r.delta_top_mr()) << ','
        << plain3(r.top.hits_at(kReportHitsCutoff)) << ','
        << fmt_detail::signed_fixed(r.delta_top_hits(), 3) << ',';
    out << plain3(r.bottom.mrr) << ',' << fmt_detail::signed_fixed(r.delta_bottom_mrr(), 3) << ','
        << format_rank(r.bottom.mr) << ',' << format_rank_delta(r.delta_bottom_mr()) << ','
        << plain3(r.bottom.hits_at(kReportHitsCutoff)) << ','
        << fmt_detail::signed_fixed(r.delta_bottom_hits(), 3) << '\n';
  }
  return out.str();
}

}  // namespace detail

inline constexpr int kComparisonSchemaVersion = 1;

inline nlohmann::json rows_to_json(const std::vector<ComparisonRow>& rows, double threshold) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j;
    j["model"] = r.model;
    j["sensitivity"] = to_string(classify_sensitivity(r, threshold));
    j["reported"] = r.reported ? nlohmann::json{{"mrr", r.reported->mrr},
                                                {"mr", r.reported->mr},
                                                {"h10", r.reported->hits10}}
                               : nlohmann::json(nullptr);
    j["random"] = {{"mean", metrics_to_json(r.random_mean)},
                   {"std", metrics_to_json(r.random_std)},
                   {"seeds", r.random_seeds}};
    j["top"] = metrics_to_json(r.top);
    j["bottom"] = metrics_to_json(r.bottom);
    j["delta_top"] = {{"mrr", r.delta_top_mrr()}, {"mr", r.delta_top_mr()}, {"h10", r.delta_top_hits()}};
    j["delta_bottom"] = {
        {"mrr", r.delta_bottom_mrr()}, {"mr", r.delta_bottom_mr()}, {"h10", r.delta_bottom_hits()}};
    arr.push_back(std::move(j));
  }
  return {{"format", "kgeval-comparison"},
          {"schema_version", kComparisonSchemaVersion},
          {"threshold", threshold},
          {"rows", arr}};
}

inline std::vector<ComparisonRow> rows_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "kgeval-comparison") throw FormatError("not a comparison report");
  if (j.value("schema_version", -1) != kComparisonSchemaVersion)
    throw FormatError("comparison report: unsupported schema_version");
  std::vector<ComparisonRow> rows;
  for (const auto& e : j.at("rows")) {
    ComparisonRow r;
    r.model = e.at("model").get<std::string>();
    if (!e.at("reported").is_null()) {
      const auto& rep = e.at("reported");
      r.reported = ReportedMetrics{rep.at("mrr").get<double>(), rep.at("mr").get<double>(),
                                   rep.at("h10").get<double>()};
    }
    r.random_mean = metrics_from_json(e.at("random").at("mean"));
    r.random_std = metrics_from_json(e.at("random").at("std"));
    r.random_seeds = e.at("random").at("seeds").get<std::size_t>();
    r.top = metrics_from_json(e.at("top"));
    r.bottom = metrics_from_json(e.at("bottom"));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string render_report(const std::vector<ComparisonRow>& rows, ReportFormat format,
                                 double threshold = kDefaultSensitivityThreshold) {
  if (rows.empty()) throw Error("render_report: no rows");
  switch (format) {
    case ReportFormat::kMarkdown: return detail::render_markdown(rows, threshold);
    case ReportFormat::kCsv: return detail::render_csv(rows, threshold);
    default: return rows_to_json(rows, threshold).dump(2) + "\n";
  }
}

}  // namespace kgeval
