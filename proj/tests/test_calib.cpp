#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "gridmon/calib.hpp"
#include "gridmon/util.hpp"

using namespace gridmon;
using namespace gridmon::calib;

namespace {

constexpr std::int64_t kSec = 1000000000LL;

Series ramp(std::int64_t start_s, std::int64_t step_s, int n, double v0, double dv) {
  Series s;
  for (int i = 0; i < n; ++i) s.push_back((start_s + i * step_s) * kSec, v0 + i * dv);
  return s;
}

}  // namespace

TEST_CASE("series enforce strictly increasing timestamps") {
  Series s;
  s.push_back(10 * kSec, 230.0);
  CHECK_THROWS(s.push_back(10 * kSec, 230.1));
  CHECK_THROWS(s.push_back(5 * kSec, 230.1));
  s.push_back(11 * kSec, 230.1);
  CHECK(s.samples().size() == 2);

  const Series rt = Series::from_csv(s.to_csv());
  CHECK(rt.to_csv() == s.to_csv());
}

TEST_CASE("last-before picks the newest sample at or before t") {
  const Series s = ramp(0, 10, 5, 230.0, 0.1);  // 0,10,20,30,40 s
  CHECK(last_before(s, 25 * kSec) == 230.2);
  CHECK(last_before(s, 20 * kSec) == 230.2);  // inclusive
  CHECK(last_before(s, 40 * kSec) == 230.4);
  CHECK_THROWS_AS(last_before(s, -1 * kSec), NoDataError);
}

TEST_CASE("interpolation is linear inside the series and refuses outside") {
  const Series s = ramp(0, 10, 3, 230.0, 0.2);  // 230.0, 230.2, 230.4
  CHECK(interpolate_at(s, 5 * kSec) == doctest::Approx(230.1));
  CHECK(interpolate_at(s, 10 * kSec) == 230.2);  // exact hit
  CHECK(interpolate_at(s, 19 * kSec) == doctest::Approx(230.38));
  CHECK_THROWS_AS(interpolate_at(s, 21 * kSec), ExtrapolationError);
  CHECK_THROWS_AS(interpolate_at(s, -1), ExtrapolationError);
}

TEST_CASE("trimmed window mean drops one extreme at each end") {
  Series s;
  const std::vector<double> values = {229.9, 230.0, 230.0, 230.1, 230.1, 230.5};
  for (std::size_t i = 0; i < values.size(); ++i)
    s.push_back((10 + static_cast<std::int64_t>(i) * 5) * kSec, values[i]);
  // Window (t-60, t] at t=40s covers all six; drop 229.9 and 230.5.
  CHECK(trimmed_mean_1min(s, 40 * kSec) == doctest::Approx(230.05));

  Series flat;
  flat.push_back(10 * kSec, 231.0);
  flat.push_back(20 * kSec, 231.0);
  flat.push_back(30 * kSec, 231.0);
  CHECK(trimmed_mean_1min(flat, 30 * kSec) == 231.0);  // all equal still averages

  Series sparse;
  sparse.push_back(10 * kSec, 230.0);
  sparse.push_back(20 * kSec, 230.2);
  CHECK_THROWS_AS(trimmed_mean_1min(sparse, 20 * kSec), InsufficientWindowError);
}

TEST_CASE("15-minute mean uses a half-open window") {
  const Series s = ramp(0, 60, 31, 230.0, 0.0);  // 0..1800 s, constant
  CHECK(mean_15min(s, 900 * kSec) == 230.0);
  Series edges;
  edges.push_back(0, 100.0);        // exactly t-900 s: excluded
  edges.push_back(900 * kSec, 230.0);  // exactly t: included
  CHECK(mean_15min(edges, 900 * kSec) == 230.0);
  // A clipped window still averages what it holds; only empty ones throw.
  CHECK(mean_15min(edges, 2 * kSec) == 100.0);
  CHECK_THROWS_AS(mean_15min(edges, -1 * kSec), InsufficientWindowError);
}

TEST_CASE("paired differences skip unservable reference points") {
  // Plug every 10 s over (0, 300]; reference every 60 s.
  Series plug, ref;
  for (int t = 10; t <= 300; t += 10) plug.push_back(t * kSec, 232.0);
  for (int t = 60; t <= 300; t += 60) ref.push_back(t * kSec, 230.0);

  const auto last_d = paired_differences(plug, ref, Method::Last);
  REQUIRE(last_d.size() == 5);
  for (const auto& d : last_d) CHECK(d.diff_v == doctest::Approx(2.0));

  // 15-minute means need both series to reach back 900 s; nothing here does.
  CHECK(paired_differences(plug, ref, Method::Mean15min).empty());

  Series lonely;
  lonely.push_back(1000 * kSec, 230.0);
  CHECK_THROWS_AS(paired_differences(plug, lonely, Method::Last), NoOverlapError);
  CHECK_THROWS_AS(paired_differences(Series{}, ref, Method::Last), NoOverlapError);
}

TEST_CASE("offset estimation recenters the plug series") {
  Series plug, ref;
  for (int t = 10; t <= 3000; t += 10)
    plug.push_back(t * kSec, 230.0 + 3.6 + 0.01 * ((t / 10 % 5) - 2));
  for (int t = 60; t <= 3000; t += 60) ref.push_back(t * kSec, 230.0);

  const auto diffs = paired_differences(plug, ref, Method::Last);
  const double offset = estimate_offset(diffs);
  CHECK(offset == doctest::Approx(3.6).epsilon(1e-3));

  const Series corrected = apply_offset(plug, offset);
  const auto after = paired_differences(corrected, ref, Method::Last);
  CHECK(std::abs(estimate_offset(after)) < 0.02);
  CHECK_THROWS_AS(estimate_offset({}), NoDataError);
}

TEST_CASE("p95 accuracy is the nearest-rank quantile of centered error") {
  std::vector<DiffSample> diffs;
  for (int i = 1; i <= 100; ++i) diffs.push_back({i * kSec, static_cast<double>(i)});
  // Centered on the mean 50.5 the sorted |diff| list pairs up
  // (0.5, 0.5, 1.5, 1.5, ...); rank ceil(0.95 * 100) = 95 lands on 47.5.
  CHECK(accuracy_p95(diffs) == doctest::Approx(47.5));
  CHECK(accuracy_p95({{0, 7.0}}) == 0.0);  // single sample sits on its mean
}

TEST_CASE("histograms expose empty bins between occupied ones") {
  const Histogram h = histogram({229.9, 230.1, 230.1, 230.4}, 0.1);
  REQUIRE(h.counts.size() == 6);  // bins 2299..2304
  CHECK(h.center(0) == doctest::Approx(229.9));
  CHECK(h.counts[0] == 1);
  CHECK(h.counts[1] == 0);  // 230.0 never reported
  CHECK(h.counts[2] == 2);
  CHECK(h.counts[5] == 1);
  CHECK(h.total() == 4);
  CHECK(histogram({}, 0.1).counts.empty());
  CHECK_THROWS(histogram({1.0}, 0.0));
}

TEST_CASE("normality test separates gaussian from uniform") {
  EventRng rng(2024, 1);
  std::vector<double> gauss, uni;
  for (int i = 0; i < 1000; ++i) {
    gauss.push_back(rng.normal(1.0));
    uni.push_back(rng.uniform01() * 2.0 - 1.0);
  }
  const NormalityResult g = anderson_darling_normality(gauss);
  CHECK(!g.reject_at_5pct);
  CHECK(g.a2_star < 0.752);
  const NormalityResult u = anderson_darling_normality(uni);
  CHECK(u.reject_at_5pct);
  CHECK(u.a2_star > 0.752);

  CHECK_THROWS_AS(anderson_darling_normality({1, 2, 3}), NormalityTestError);
  CHECK_THROWS_AS(anderson_darling_normality(std::vector<double>(10, 5.0)),
                  NormalityTestError);
}

TEST_CASE("pearson correlation handles the degenerate cases") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  const std::vector<double> y = {2, 4, 6, 8, 10};
  CHECK(pearson_correlation(x, y) == doctest::Approx(1.0));
  std::vector<double> inv(y.rbegin(), y.rend());
  CHECK(pearson_correlation(x, inv) == doctest::Approx(-1.0));
  CHECK(pearson_correlation(x, std::vector<double>(5, 3.0)) == 0.0);
  CHECK_THROWS(pearson_correlation(x, {1.0, 2.0}));
}
