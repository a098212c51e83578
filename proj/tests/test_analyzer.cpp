#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "pinch/analyzer.hpp"
#include "pinch/report.hpp"

using namespace pinch;
using namespace pinch::analyzer;
using pinch::report::Json;

namespace {

/// Analysis results are reused across tests; each model is analyzed once.
const PinchReport& analyzed(const std::string& key) {
  static std::map<std::string, PinchReport> cache;
  auto it = cache.find(key);
  if (it != cache.end())
    return it->second;
  models::Model md;
  if (key == "great_sphere")
    md = models::great_sphere(2, 2);
  else if (key == "clifford")
    md = models::clifford(1, 2);
  else if (key == "product112")
    md = models::sphere_product({1, 1, 2});
  else if (key == "veronese")
    md = models::veronese();
  else
    md = models::nonminimal_torus(0.6);
  return cache.emplace(key, analyze(md)).first->second;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s)
    n += c == '\n';
  return n;
}

} // namespace

// --- analyze ----------------------------------------------------------------

TEST(Analyze, GreatSphere) {
  const auto& r = analyzed("great_sphere");
  EXPECT_EQ(r.verdict, "great_sphere");
  EXPECT_TRUE(r.thm11_hypothesis);
  EXPECT_TRUE(r.thm12_hypothesis);
  EXPECT_TRUE(r.consistent());
  EXPECT_LE(r.at("S").max, 1e-8);
}

TEST(Analyze, CliffordTorus) {
  const auto& r = analyzed("clifford");
  EXPECT_EQ(r.verdict, "clifford");
  EXPECT_EQ(r.first_normal_rank, 1u);
  EXPECT_NEAR(r.at("S").mean, 2.0, 1e-6);
  EXPECT_NEAR(r.at("lambda1").mean, 2.0, 1e-6);
  EXPECT_LE(r.at("rho_perp").max, 1e-6);
  EXPECT_TRUE(r.thm11_hypothesis);
  EXPECT_TRUE(r.consistent());
}

TEST(Analyze, ProductOfThreeSpheres) {
  const auto& r = analyzed("product112");
  EXPECT_EQ(r.verdict, "sphere_product");
  EXPECT_EQ(r.first_normal_rank, 2u);
  EXPECT_NEAR(r.at("S").mean, 8.0, 1e-4);
  ASSERT_TRUE(r.thm11_bound.has_value());
  EXPECT_NEAR(*r.thm11_bound, 0.0, 1e-6);
  EXPECT_TRUE(r.thm11_hypothesis);
  EXPECT_TRUE(r.consistent());
}

TEST(Analyze, VeroneseIsNotClassified) {
  const auto& r = analyzed("veronese");
  EXPECT_EQ(r.verdict, "unclassified");
  EXPECT_FALSE(r.thm11_hypothesis);
  ASSERT_TRUE(r.thm11_bound.has_value());
  EXPECT_NEAR(*r.thm11_bound, (2.0 - 2.0 / 3.0) / (std::sqrt(2.0) * 2.0), 1e-5);
  EXPECT_NEAR(r.at("rho_perp").mean, 2.0 / 3.0, 1e-6);
  EXPECT_TRUE(r.consistent());
}

TEST(Analyze, NonMinimalControlIsNotClassified) {
  const auto& r = analyzed("nonminimal");
  EXPECT_FALSE(r.minimal);
  EXPECT_EQ(r.verdict, "unclassified");
  EXPECT_TRUE(r.consistent());
}

TEST(Analyze, AggregatesAreOrdered) {
  for (const char* key : {"great_sphere", "clifford", "product112", "veronese", "nonminimal"}) {
    const auto& r = analyzed(key);
    for (const auto& [name, a] : r.aggregates) {
      EXPECT_LE(a.min, a.mean) << key << " " << name;
      EXPECT_LE(a.mean, a.max) << key << " " << name;
    }
  }
}

TEST(Analyze, ParallelModelsBalanceSimons) {
  for (const char* key : {"clifford", "product112", "veronese"}) {
    const auto& r = analyzed(key);
    const double n = static_cast<double>(r.n);
    EXPECT_LE(std::abs(r.at("simons_balance").max), 1e-6 * std::max(1.0, n * r.at("S").max)) << key;
    EXPECT_LE(std::abs(r.at("simons_balance").min), 1e-6 * std::max(1.0, n * r.at("S").max)) << key;
    EXPECT_LE(r.at("nabla_h2").max, 1e-4) << key;
  }
}

TEST(Analyze, ExpectedVerdictMismatchIsReported) {
  PinchReport r = analyzed("clifford");
  r.expected_verdict = "great_sphere";
  evaluate_hypotheses(r, r.provenance.tol);
  EXPECT_FALSE(r.consistent());
}

TEST(Analyze, BadGridIsAConfigError) {
  AnalyzeOptions o;
  o.grid = std::vector<std::size_t>{4, 4, 4};
  EXPECT_THROW(analyze(models::clifford(1, 2), o), ConfigError);
}

// --- corollaries ------------------------------------------------------------

TEST(CorollaryScanTest, CliffordSitsOnTheThreshold) {
  const auto& r = analyzed("clifford");
  const auto c = corollary_scan(r);
  EXPECT_NEAR(c.delta, 4.0 * 4.0 * r.vol * r.vol, 1e-6 * 16.0 * r.vol * r.vol);
  ASSERT_TRUE(c.cor14_threshold.has_value());
  EXPECT_NEAR(*c.cor14_threshold, 0.0, 1e-6);
  EXPECT_TRUE(c.cor14_hypothesis.value_or(false));
}

TEST(CorollaryScanTest, GreatSphereThresholdIsPositive) {
  const auto c = corollary_scan(analyzed("great_sphere"));
  ASSERT_TRUE(c.cor14_threshold.has_value());
  EXPECT_NEAR(*c.cor14_threshold, 1.0, 1e-9);
  EXPECT_TRUE(c.cor14_hypothesis.value_or(false));
  EXPECT_NE(c.claim.find("great sphere"), std::string::npos);
}

TEST(CorollaryScanTest, VeroneseMakesNoClaim) {
  const auto c = corollary_scan(analyzed("veronese"));
  ASSERT_TRUE(c.cor14_threshold.has_value());
  EXPECT_NEAR(*c.cor14_threshold, 0.187184, 1e-5);
  EXPECT_FALSE(c.cor14_hypothesis.value_or(true));
  EXPECT_NE(c.claim.find("no classification"), std::string::npos);
}

TEST(Hypotheses, TighteningTolNeverRescuesAFailure) {
  for (const char* key : {"clifford", "product112", "veronese", "nonminimal"}) {
    PinchReport r = analyzed(key);
    bool t11 = true, t12 = true;
    for (double tol : {1e-2, 1e-4, 1e-6, 1e-9, 1e-12, 0.0}) {
      Tolerances t = r.provenance.tol;
      t.hyp_tol = tol;
      evaluate_hypotheses(r, t);
      if (!t11) {
        EXPECT_FALSE(r.thm11_hypothesis) << key << " tol " << tol;
      }
      if (!t12) {
        EXPECT_FALSE(r.thm12_hypothesis) << key << " tol " << tol;
      }
      t11 = r.thm11_hypothesis;
      t12 = r.thm12_hypothesis;
    }
  }
}

TEST(Helpers, NormalRankAndConstancy) {
  Spectrum sp;
  sp.values = {4.0, 4.0, 1e-9};
  sp.dim = 3;
  EXPECT_EQ(normal_rank(sp, 1e-8), 2u);
  sp.values = {0.0, 0.0};
  EXPECT_EQ(normal_rank(sp, 1e-8), 0u);
  EXPECT_TRUE(is_constant({2.0, 2.0 + 1e-7, 2.0}, 1e-6));
  EXPECT_FALSE(is_constant({2.0, 2.1, 2.05}, 1e-6));
}

// --- sweeps -----------------------------------------------------------------

TEST(Sweep, EverySuitePasses) {
  for (const auto& s : suite_names()) {
    SweepOptions o;
    o.suite = s;
    o.count = 300;
    const auto r = sweep(o);
    EXPECT_TRUE(r.passed) << s << " failures " << r.failures;
    EXPECT_EQ(r.count, 300u);
  }
}

TEST(Sweep, Lemma34WithOneNormalIsExactlyZero) {
  SweepOptions o;
  o.suite = "lemma34";
  o.count = 200;
  o.fixed_m = 1;
  const auto r = sweep(o);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.min_normalized, 0.0);
}

TEST(Sweep, CorruptedSignFails) {
  for (const char* s : {"ddvv", "lemma34", "frame_invariance"}) {
    SweepOptions o;
    o.suite = s;
    o.count = 50;
    o.corrupt_sign = true;
    const auto r = sweep(o);
    EXPECT_FALSE(r.passed) << s;
    EXPECT_GT(r.failures, 0u);
    EXPECT_FALSE(r.argmin_digest.empty());
  }
}

TEST(Sweep, DeterministicBySeed) {
  SweepOptions o;
  o.suite = "bw";
  o.count = 100;
  const auto a = sweep(o), b = sweep(o);
  EXPECT_EQ(a.argmin_digest, b.argmin_digest);
  EXPECT_EQ(a.min_normalized, b.min_normalized);
}

TEST(Sweep, RejectsBadOptions) {
  SweepOptions o;
  o.suite = "nope";
  EXPECT_THROW(sweep(o), ConfigError);
  o.suite = "ddvv";
  o.count = 0;
  EXPECT_THROW(sweep(o), ConfigError);
}

TEST(CheckOps, EqualityPairPasses) {
  const ShapeOperatorSet ops({SymMat{{0, 1}, {1, 0}}, SymMat{{1, 0}, {0, -1}}});
  const auto c = check_ops(ops, 1e-9);
  EXPECT_TRUE(c.passed);
  EXPECT_EQ(c.gaps.size(), 4u);
}

// --- serialization ----------------------------------------------------------

TEST(Emit, ByteIdenticalAcrossRuns) {
  const auto a = analyze(models::clifford(1, 2));
  const auto b = analyze(models::clifford(1, 2));
  for (const char* f : {"json", "csv", "text"})
    EXPECT_EQ(report::report_emit(a, f), report::report_emit(b, f)) << f;
}

TEST(Emit, JsonRoundTrip) {
  for (const char* key : {"clifford", "veronese", "nonminimal"}) {
    const auto& r = analyzed(key);
    const auto text = report::report_emit(r, "json");
    const auto back = report::report_from_string(text);
    EXPECT_TRUE(back == r) << key;
    EXPECT_EQ(report::report_emit(back, "json"), text) << key;
  }
}

TEST(Emit, JsonCarriesProvenanceTags) {
  const auto j = Json::parse(report::report_emit(analyzed("veronese"), "json"));
  ASSERT_TRUE(j.contains("expected"));
  for (const auto& e : j["expected"])
    EXPECT_TRUE(e.contains("provenance"));
}

TEST(Emit, CsvHasOneRowPerSamplePlusFooter) {
  const auto& r = analyzed("clifford");
  const auto csv = report::report_emit(r, "csv");
  EXPECT_EQ(count_lines(csv), 1 + r.samples.size() + 3);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("row,u0,u1,weight,normal_rank,S,", 0), 0u);
}

TEST(Emit, UnknownFormatThrows) { EXPECT_THROW(report::report_emit(analyzed("clifford"), "xml"), ConfigError); }

TEST(Emit, NumberFormatting) {
  EXPECT_EQ(report::format_number(2.0), "2.0");
  EXPECT_EQ(report::format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(report::dump(Json(std::nan("")), 0), "null");
}

TEST(Parse, OpsRoundTripAndValidation) {
  const ShapeOperatorSet ops({SymMat{{1, 2}, {2, -1}}, SymMat{{0, 0.5}, {0.5, 3}}});
  const auto back = report::ops_from_json(report::to_json(ops));
  ASSERT_EQ(back.m(), 2u);
  for (std::size_t a = 0; a < 2; ++a)
    EXPECT_EQ(back[a].mat().data(), ops[a].mat().data());
  EXPECT_THROW(report::ops_from_json(Json::parse(R"({"ops": [[[1, 2], [0, 1]]]})")), ConfigError);
  EXPECT_THROW(report::ops_from_json(Json::parse(R"({"ops": []})")), Error);
}

TEST(Parse, ModelConfig) {
  const auto c = report::model_config_from_json(
      Json::parse(R"({"model": "clifford", "params": {"k": 1, "n": 3}, "grid": [4], "fd_step": 0.002})"));
  EXPECT_EQ(c.model, "clifford");
  EXPECT_EQ(c.params.k, 1u);
  EXPECT_EQ(c.params.n, 3u);
  ASSERT_TRUE(c.options.grid.has_value());
  EXPECT_EQ(c.options.fd_step, 0.002);
  EXPECT_THROW(report::model_config_from_json(Json::parse(R"({"model": "clifford", "colour": 1})")), ConfigError);
  EXPECT_THROW(report::model_config_from_json(Json::parse(R"({"params": {}})")), ConfigError);
  EXPECT_THROW(report::model_config_from_json(Json::parse(R"({"model": "clifford", "params": {"q": 1}})")),
               ConfigError);
}
