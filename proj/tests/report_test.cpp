#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "kgeval/kgeval.hpp"

using namespace kgeval;

namespace {

Metrics metrics(double mrr, double mr, double h10) {
  Metrics m;
  m.mrr = mrr;
  m.mr = mr;
  m.hits[10] = h10;
  m.count = 100;
  return m;
}

ComparisonRow row(std::string model, double top, double random, double bottom) {
  ComparisonRow r;
  r.model = std::move(model);
  r.top = metrics(top, 200, 0.5);
  r.random_mean = metrics(random, 240, 0.45);
  r.random_std = metrics(0.0057, 3.2, 0.0012);
  r.random_seeds = 5;
  r.bottom = metrics(bottom, 300, 0.4);
  return r;
}

std::vector<ComparisonRow> golden_rows() {
  auto affected = row("tied-relu", 0.407, 0.243, 0.130);
  affected.reported = ReportedMetrics{0.396, 258, 0.517};
  auto clean = row("transe", 0.324, 0.324, 0.324);
  clean.top = clean.random_mean;
  clean.bottom = clean.random_mean;
  clean.random_std = metrics(0.0, 0.0, 0.0);
  return {affected, clean};
}

std::string read_golden(const std::string& name) {
  std::ifstream in(std::string(KGEVAL_GOLDEN_DIR) + "/" + name, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Sensitivity, Classification) {
  EXPECT_EQ(classify_sensitivity(row("a", 0.407, 0.243, 0.130)), Sensitivity::kAffected);
  EXPECT_EQ(classify_sensitivity(row("b", 0.324, 0.324, 0.324)), Sensitivity::kNonAffected);
  // Exactly at the threshold is not affected.
  EXPECT_EQ(classify_sensitivity(row("c", 0.75, 0.6, 0.5), 0.25), Sensitivity::kNonAffected);
  EXPECT_EQ(classify_sensitivity(row("c", 0.75, 0.6, 0.5), 0.125), Sensitivity::kAffected);
}

TEST(Formatting, Numbers) {
  EXPECT_EQ(format_fraction(0.407), ".407");
  EXPECT_EQ(format_fraction(1.0), "1.000");
  EXPECT_EQ(format_std(0.0057), ".0057");
  EXPECT_EQ(format_rank(239.6), "240");
  EXPECT_EQ(format_fraction_delta(0.407 - 0.243), "+.164");
  EXPECT_EQ(format_fraction_delta(0.130 - 0.243), "-.113");
  EXPECT_EQ(format_fraction_delta(-1e-17), "+.000");
  EXPECT_EQ(format_rank_delta(0.0), "+0");
  EXPECT_EQ(format_rank_delta(-60.0), "-60");
}

TEST(Render, DeltaAgainstRandom) {
  const std::string md = render_report({row("m", 0.407, 0.243, 0.130)}, ReportFormat::kMarkdown);
  EXPECT_NE(md.find(".407 (+.164)"), std::string::npos);
  EXPECT_NE(md.find(".243 ± .0057"), std::string::npos);
  EXPECT_NE(md.find(".130 (-.113)"), std::string::npos);
  EXPECT_NE(md.find("| affected |"), std::string::npos);
  EXPECT_EQ(md.find("Reported"), std::string::npos);
}

TEST(Render, NonAffectedShowsZeroDeltas) {
  const auto rows = golden_rows();
  const std::string md = render_report({rows[1]}, ReportFormat::kMarkdown);
  EXPECT_NE(md.find(".324 (+.000)"), std::string::npos);
  EXPECT_NE(md.find("(+0)"), std::string::npos);
  EXPECT_NE(md.find("| non-affected |"), std::string::npos);
}

TEST(Render, GoldenMarkdown) {
  EXPECT_EQ(render_report(golden_rows(), ReportFormat::kMarkdown), read_golden("comparison.md"));
}

TEST(Render, GoldenCsv) {
  EXPECT_EQ(render_report(golden_rows(), ReportFormat::kCsv), read_golden("comparison.csv"));
}

TEST(Render, GoldenJson) {
  EXPECT_EQ(render_report(golden_rows(), ReportFormat::kJson), read_golden("comparison.json"));
}

TEST(Render, JsonRoundTrip) {
  const auto rows = golden_rows();
  const auto j = rows_to_json(rows, 0.01);
  const auto back = rows_from_json(j);
  ASSERT_EQ(back.size(), rows.size());
  EXPECT_EQ(rows_to_json(back, 0.01), j);
  EXPECT_TRUE(back[0].reported.has_value());
  EXPECT_FALSE(back[1].reported.has_value());
  EXPECT_THROW(rows_from_json(nlohmann::json{{"format", "other"}}), FormatError);
}

TEST(Render, RejectsEmptyAndUnknown) {
  EXPECT_THROW(render_report({}, ReportFormat::kMarkdown), Error);
  EXPECT_THROW(parse_report_format("html"), Error);
}

TEST(ComparisonRow, FromEvaluation) {
  const Dataset ds = synthetic_kg();
  const ConstantScorer c(0.0, ds.entity_count(), ds.relation_count());
  const auto r = evaluate(ds, c, EvalConfig{});
  const ComparisonRow row = comparison_row(r, "const");
  EXPECT_EQ(row.top.mrr, 1.0);
  EXPECT_LT(row.bottom.mrr, 0.05);
  EXPECT_EQ(row.random_seeds, 5u);
  EXPECT_EQ(classify_sensitivity(row), Sensitivity::kAffected);
  EvalConfig only_top;
  only_top.protocols = {Protocol::kTop};
  EXPECT_THROW(comparison_row(evaluate(ds, c, only_top)), Error);
}
