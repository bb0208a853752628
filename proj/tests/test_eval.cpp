#include "doctest.h"
#include "plin/errors.hpp"
#include "plin/eval.hpp"
#include "plin/rng.hpp"

using namespace plin;

namespace {

DepthMap from_values(const std::vector<double>& vals) {
  DepthMap d(static_cast<int>(vals.size()), 1);
  for (int u = 0; u < d.width(); ++u) {
    d.grid.at(u, 0) = vals[static_cast<std::size_t>(u)];
    d.mask.set(u, 0, true);
  }
  return d;
}

}  // namespace

TEST_CASE("evaluate: identical maps score zero on all four metrics") {
  DepthMap d = from_values({1.0, 2.0, 3.0});
  MetricReport r = evaluate(d, d);
  CHECK(r.rmse == 0.0);
  CHECK(r.mae == 0.0);
  CHECK(r.irmse == 0.0);
  CHECK(r.imae == 0.0);
  CHECK(r.valid_count == 3);
}

TEST_CASE("evaluate: hand-computed two-pixel example") {
  DepthMap gt = from_values({2.0, 4.0});
  DepthMap pred = from_values({3.0, 4.0});
  MetricReport r = evaluate(pred, gt);
  CHECK(r.mae == doctest::Approx(500.0).epsilon(1e-3));
  CHECK(r.rmse == doctest::Approx(707.106).epsilon(1e-3));
  CHECK(r.imae == doctest::Approx(83.333).epsilon(1e-3));
  CHECK(r.irmse == doctest::Approx(117.851).epsilon(1e-3));
  CHECK(r.valid_count == 2);
}

TEST_CASE("evaluate restricts to jointly valid pixels") {
  DepthMap gt = from_values({2.0, 4.0, 8.0});
  DepthMap pred = from_values({3.0, 4.0, 1.0});
  pred.mask.set(2, 0, false);  // gt-only pixel must not count
  MetricReport r = evaluate(pred, gt);
  CHECK(r.valid_count == 2);
  CHECK(r.mae == doctest::Approx(500.0).epsilon(1e-3));

  gt.mask.set(0, 0, false);  // now only pixel 1 remains
  r = evaluate(pred, gt);
  CHECK(r.valid_count == 1);
  CHECK(r.rmse == 0.0);
}

TEST_CASE("evaluate error handling") {
  DepthMap a = from_values({1.0});
  DepthMap wrong(2, 1);
  CHECK_THROWS_AS(evaluate(a, wrong), std::invalid_argument);

  DepthMap empty(3, 1), gt3(3, 1);
  CHECK_THROWS_AS(evaluate(empty, gt3), std::invalid_argument);

  DepthMap zero = from_values({0.0});
  CHECK_THROWS_AS(evaluate(zero, a), NumericError);
  CHECK_THROWS_AS(evaluate(a, zero), NumericError);
}

TEST_CASE("evaluate symmetry and RMSE >= MAE") {
  DepthMap gt = from_values({5.0, 6.0, 7.0, 8.0});
  DepthMap hi = from_values({5.5, 6.5, 7.5, 8.5});
  DepthMap lo = from_values({4.5, 5.5, 6.5, 7.5});
  MetricReport rh = evaluate(hi, gt);
  MetricReport rl = evaluate(lo, gt);
  CHECK(rh.rmse == doctest::Approx(rl.rmse).epsilon(1e-12));
  CHECK(rh.mae == doctest::Approx(rl.mae).epsilon(1e-12));

  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> g(30), p(30);
    for (int i = 0; i < 30; ++i) {
      g[static_cast<std::size_t>(i)] = rng.uniform(0.5, 50.0);
      p[static_cast<std::size_t>(i)] = rng.uniform(0.5, 50.0);
    }
    MetricReport r = evaluate(from_values(p), from_values(g));
    CHECK(r.rmse >= r.mae);
    CHECK(r.irmse >= r.imae);
  }
}

TEST_CASE("evaluate scaling: depth scale alpha moves mm up and 1/km down") {
  DepthMap gt = from_values({2.0, 3.0, 5.0});
  DepthMap pred = from_values({2.5, 2.5, 5.5});
  MetricReport r1 = evaluate(pred, gt);

  auto scaled = [](const DepthMap& d, double a) {
    DepthMap out = d;
    for (auto& x : out.grid.data) x *= a;
    return out;
  };
  MetricReport r2 = evaluate(scaled(pred, 4.0), scaled(gt, 4.0));
  CHECK(r2.rmse == doctest::Approx(4.0 * r1.rmse).epsilon(1e-9));
  CHECK(r2.mae == doctest::Approx(4.0 * r1.mae).epsilon(1e-9));
  CHECK(r2.irmse == doctest::Approx(r1.irmse / 4.0).epsilon(1e-9));
  CHECK(r2.imae == doctest::Approx(r1.imae / 4.0).epsilon(1e-9));
}

TEST_CASE("traditional_interpolate averages and falls back to one side") {
  DepthMap a(3, 1), b(3, 1);
  a.grid.at(0, 0) = 4.0;
  a.mask.set(0, 0, true);
  b.grid.at(0, 0) = 6.0;
  b.mask.set(0, 0, true);
  a.grid.at(1, 0) = 2.0;
  a.mask.set(1, 0, true);

  DepthMap m = traditional_interpolate(a, b);
  CHECK(m.grid.at(0, 0) == 5.0);
  CHECK(m.grid.at(1, 0) == 2.0);
  CHECK_FALSE(m.mask.get(2, 0));

  DepthMap same = traditional_interpolate(a, a);
  CHECK(same.grid.data == a.grid.data);
  CHECK(same.mask == a.mask);

  DepthMap wrong(2, 1);
  CHECK_THROWS_AS(traditional_interpolate(a, wrong), std::invalid_argument);
}

TEST_CASE("metric CSV line and table carry all five fields") {
  DepthMap gt = from_values({2.0, 4.0});
  DepthMap pred = from_values({3.0, 4.0});
  MetricReport r = evaluate(pred, gt);
  std::string header = metrics_csv_header();
  std::string line = metrics_csv_line("demo", r);
  CHECK(header == "label,rmse_mm,mae_mm,irmse_1perkm,imae_1perkm,valid_count");
  CHECK(line.find("demo,") == 0);
  CHECK(line.find("707.106") != std::string::npos);
  CHECK(line.find(",2") == line.size() - 2);
  // The table rounds to three decimals.
  CHECK(metrics_table("demo", r).find("707.107") != std::string::npos);
}
