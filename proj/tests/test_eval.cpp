#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles/oracles.hpp"
#include "tad/eval.hpp"
#include "tad/frame_io.hpp"

using namespace tad;

TEST_CASE("match examples") {
  auto m = match({}, {{"v", 10}});
  CHECK(m.fn.size() == 1);
  CHECK(m.tp.empty());

  m = match({{"v", 19.9, 0.5}}, {{"v", 10}});
  CHECK(m.tp.size() == 1);

  m = match({{"v", 18, 0.9}, {"v", 11, 0.4}}, {{"v", 10}});
  REQUIRE(m.tp.size() == 1);
  CHECK(m.tp[0].first == 0);
  REQUIRE(m.fp.size() == 1);
  CHECK(m.fp[0] == 1);

  // other videos never match
  m = match({{"w", 10, 0.9}}, {{"v", 10}});
  CHECK(m.tp.empty());
  CHECK(m.fp.size() == 1);
  CHECK(m.fn.size() == 1);
}

TEST_CASE("confidence ties fall back to error then time") {
  auto m = match({{"v", 14, 0.5}, {"v", 12, 0.5}, {"v", 8, 0.5}}, {{"v", 10}});
  REQUIRE(m.tp.size() == 1);
  CHECK(m.tp[0].first == 2);  // |8-10| = |12-10|, 8 is earlier
}

TEST_CASE("a preferred prediction is released when it is the only option of a later truth") {
  // gt 10 prefers the 0.9 pred at 18; gt 25 can only reach that one.
  auto m = match({{"v", 18, 0.9}, {"v", 9, 0.2}}, {{"v", 10}, {"v", 25}});
  CHECK(m.tp.size() == 2);
  CHECK(m.fp.empty());
}

TEST_CASE("match agrees with exhaustive assignment on random instances") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> ng(0, 5), np(0, 8);
  std::uniform_real_distribution<double> t(0, 60), c(0, 1);
  for (int it = 0; it < 300; ++it) {
    std::vector<PredictionEvent> preds;
    std::vector<GroundTruthEvent> gts;
    std::vector<double> pt, gt;
    for (int i = ng(rng); i > 0; --i) gts.push_back({"v", t(rng)}), gt.push_back(gts.back().true_time);
    for (int i = np(rng); i > 0; --i) preds.push_back({"v", t(rng), c(rng)}), pt.push_back(preds.back().pred_time);
    auto m = match(preds, gts);
    std::size_t best = oracle::max_tp(pt, gt, 10.0);
    CHECK(m.tp.size() == best);
    CHECK(m.tp.size() + m.fn.size() == gts.size());
    CHECK(m.tp.size() + m.fp.size() == preds.size());
    for (auto [p, g] : m.tp) CHECK(std::abs(preds[p].pred_time - gts[g].true_time) <= 10.0);
  }
}

TEST_CASE("f1 examples") {
  CHECK(f1_score(10, 0, 0) == 1.0);
  CHECK(f1_score(0, 3, 2) == 0.0);
  CHECK(f1_score(140, 7, 7) == doctest::Approx(140.0 / 147).epsilon(1e-12));
  CHECK(f1_score(140, 7, 7) == doctest::Approx(0.95238).epsilon(1e-5));
  bool undef = false;
  CHECK(f1_score(0, 0, 0, &undef) == 0.0);
  CHECK(undef);
}

TEST_CASE("nrmse examples") {
  CHECK(nrmse({0, 0, 0}) == 0.0);
  CHECK(nrmse({300}) == 1.0);
  double rmse = 0;
  CHECK(nrmse({3, 4}, 300, nullptr, &rmse) == doctest::Approx(std::sqrt(12.5) / 300).epsilon(1e-12));
  CHECK(rmse == doctest::Approx(3.5355).epsilon(1e-4));
  CHECK(nrmse({3, 4}) == doctest::Approx(0.011785).epsilon(1e-4));
  bool none = false;
  CHECK(nrmse({}, 300, &none) == 1.0);
  CHECK(none);
  CHECK(nrmse({1000}) == 1.0);
}

TEST_CASE("nrmse is monotone in each error and saturates") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> e(0, 400);
  for (int it = 0; it < 200; ++it) {
    std::vector<double> v{e(rng), e(rng), e(rng)};
    double base = nrmse(v);
    v[it % 3] += 5.0;
    CHECK(nrmse(v) >= base);
    CHECK(nrmse(v) <= 1.0);
  }
}

TEST_CASE("s4 of a known F1 and RMSE pair") {
  CHECK(s4(0.9524, std::min(5.3080, 300.0) / 300.0) == doctest::Approx(0.9355).epsilon(5e-5));
  CHECK(s4(1, 0) == 1.0);
  CHECK(s4(0, 0.3) == 0.0);
}

TEST_CASE("evaluate invariants and cap passthrough") {
  std::vector<PredictionEvent> p{{"a", 12, 0.9}, {"a", 70, 0.3}, {"b", 5, 0.8}};
  std::vector<GroundTruthEvent> g{{"a", 10}, {"b", 40}};
  auto r = evaluate(p, g);
  CHECK(r.tp == 1);
  CHECK(r.fp == 2);
  CHECK(r.fn == 1);
  CHECK(r.s4 == doctest::Approx(r.f1 * (1 - r.nrmse)).epsilon(1e-12));
  CHECK(r.nrmse == doctest::Approx(2.0 / 300));
  auto r100 = evaluate(p, g, 10, 100);
  CHECK(r100.nrmse == doctest::Approx(2.0 / 100));
  CHECK(r100.nrmse_cap == 100);
}

TEST_CASE("prediction and ground-truth files round-trip") {
  std::vector<PredictionEvent> p{{"cam1", 12.5, 0.75}, {"cam2", 0, 1}};
  std::stringstream ss;
  write_predictions(ss, p);
  auto back = parse_predictions(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].video_id == "cam1");
  CHECK(back[0].pred_time == 12.5);
  CHECK(back[1].confidence == 1.0);

  std::stringstream gs("# comment\n\nv1 10.0\nv2 3\n");
  auto gts = parse_ground_truth(gs);
  CHECK(gts.size() == 2);

  std::stringstream bad("v1 10\nv1 x\n");
  try {
    parse_ground_truth(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::stringstream badc("v 1 1.5\n");
  CHECK_THROWS_AS(parse_predictions(badc), ParseError);
}

TEST_CASE("report has a readable part and a key=value block") {
  auto r = evaluate({{"a", 12, 0.9}}, {{"a", 10}});
  std::ostringstream os;
  write_report(os, r);
  CHECK(os.str().find("[metrics]") != std::string::npos);
  CHECK(os.str().find("tp=1\n") != std::string::npos);
  CHECK(os.str().find("rmse=2.000000") != std::string::npos);
}
