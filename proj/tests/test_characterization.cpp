#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "febsim/channel_sim.hpp"
#include "febsim/characterization.hpp"
#include "febsim/constants.hpp"

using namespace febsim;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

ScanCurve synthetic_scurve(double median, double sigma, int n_pts = 21) {
  ScanCurve c;
  c.kind = ScanKind::threshold_scan;
  for (double v : linspace(median - 4.0 * sigma, median + 4.0 * sigma, n_pts)) {
    c.x.push_back(v);
    c.y.push_back(0.5 * std::erfc((v - median) / (std::sqrt(2.0) * sigma)));
    c.y_err.push_back(0.01);
  }
  return c;
}

}  // namespace

TEST_CASE("scan curve validation") {
  ScanCurve c = synthetic_scurve(60.0, 2.9);
  CHECK_NOTHROW(c.validate());
  ScanCurve bad = c;
  bad.y_err.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.x[3] = bad.x[2];
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.y[0] = 1.2;  // occupancy outside [0, 1]
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = c;
  bad.y_err[0] = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  // Rates above 1 are fine for non-occupancy curves.
  ScanCurve rate;
  rate.kind = ScanKind::noise_occupancy;
  rate.x = {0.0, 1.0};
  rate.y = {90.0, 55.0};
  rate.y_err = {1.0, 1.0};
  CHECK_NOTHROW(rate.validate());
}

TEST_CASE("s-curve fit: exact recovery on its own model") {
  const ScanCurve c = synthetic_scurve(60.0, 2.9);
  const SCurveFit fit = fit_scurve(c);
  CHECK(fit.median_mv == doctest::Approx(60.0).epsilon(1e-6));
  CHECK(fit.sigma_mv == doctest::Approx(2.9).epsilon(1e-6));
  CHECK(fit.chi2_ndf < 1e-10);
  CHECK(fit.covariance[0][0] > 0.0);
}

TEST_CASE("s-curve fit: rejections") {
  ScanCurve reversed = synthetic_scurve(60.0, 2.9);
  std::reverse(reversed.x.begin(), reversed.x.end());
  std::reverse(reversed.y.begin(), reversed.y.end());
  CHECK_THROWS_AS(fit_scurve(reversed), std::invalid_argument);

  // A curve that never brackets occupancy 1/2 cannot localize the median.
  ScanCurve high;
  high.kind = ScanKind::threshold_scan;
  for (double v : linspace(40.0, 50.0, 11)) {
    high.x.push_back(v);
    high.y.push_back(0.5 * std::erfc((v - 60.0) / (std::sqrt(2.0) * 2.9)));
    high.y_err.push_back(0.01);
  }
  CHECK_THROWS_AS(fit_scurve(high), std::invalid_argument);

  ScanCurve wrong_kind = synthetic_scurve(60.0, 2.9);
  wrong_kind.kind = ScanKind::noise_occupancy;
  CHECK_THROWS_AS(fit_scurve(wrong_kind), std::invalid_argument);
}

TEST_CASE("threshold scan: preconditions, jobs invariance, mc fidelity") {
  const ChipConfig chip = nominal_chip_config(1);
  const ChannelSimulator sim(chip, 0);
  const auto thr = linspace(60.0 - 12.0, 60.0 + 12.0, 9);

  CHECK_THROWS_AS(run_threshold_scan(sim, 1.0, thr, 99, 5), std::invalid_argument);
  std::vector<double> unsorted{50.0, 50.0, 51.0};
  CHECK_THROWS_AS(run_threshold_scan(sim, 1.0, unsorted, 500, 5),
                  std::invalid_argument);

  const ScanCurve one = run_threshold_scan(sim, 1.0, thr, 400, 5, 1);
  const ScanCurve four = run_threshold_scan(sim, 1.0, thr, 400, 5, 4);
  CHECK(one.x == four.x);
  CHECK(one.y == four.y);
  CHECK(one.y_err == four.y_err);
  CHECK_NOTHROW(one.validate());
  for (double e : one.y_err) CHECK(e > 0.0);

  // Monte Carlo s-curve reproduces the configured gain and noise.
  const auto curve = run_threshold_scan(
      sim, 1.0, linspace(60.0 - 4.0 * 2.9, 60.0 + 4.0 * 2.9, 21), 2000, 11);
  const SCurveFit fit = fit_scurve(curve);
  CHECK(fit.median_mv == doctest::Approx(60.0).epsilon(0.01));
  CHECK(fit.sigma_mv == doctest::Approx(2.9).epsilon(0.05));
}

TEST_CASE("gain extraction: exact line and affine equivariance") {
  auto make_fit = [](double median) {
    SCurveFit f;
    f.median_mv = median;
    f.covariance[0][0] = 0.01;
    return f;
  };
  std::vector<std::pair<double, SCurveFit>> fits;
  for (double q : {1.0, 1.5, 2.0, 3.0})
    fits.emplace_back(q, make_fit(60.0 * q));
  GainFit g = extract_gain(fits);
  CHECK(g.gain_mv_per_fc == doctest::Approx(60.0).epsilon(1e-9));
  CHECK(g.offset_mv == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));

  fits.clear();
  for (double q : {1.0, 1.5, 2.0, 3.0})
    fits.emplace_back(q, make_fit(58.5 * q + 5.0));
  g = extract_gain(fits);
  CHECK(g.gain_mv_per_fc == doctest::Approx(58.5).epsilon(1e-9));
  CHECK(g.offset_mv == doctest::Approx(5.0).epsilon(1e-9));

  fits.resize(1);
  CHECK_THROWS_AS(extract_gain(fits), std::invalid_argument);
}

TEST_CASE("rice constant: frozen values and the curvature-moment oracle") {
  CHECK(rice_kappa(PulseShape({3, 5.3, {}})) ==
        doctest::Approx(0.47746482927568601).epsilon(1e-9));
  CHECK(rice_kappa(PulseShape({2, 5.3, {}})) ==
        doctest::Approx(0.551328895421792).epsilon(1e-9));
  CHECK(rice_kappa(PulseShape({4, 7.0, {}})) ==
        doctest::Approx(0.4931235552491998).epsilon(1e-9));
  // Scale invariance: kappa depends on the order only.
  CHECK(rice_kappa(PulseShape({3, 9.0, {}})) ==
        doctest::Approx(rice_kappa(PulseShape({3, 4.0, {}}))).epsilon(1e-10));
  CHECK_THROWS_AS(rice_kappa(PulseShape({1, 5.3, {}})), std::domain_error);

  // Independent oracle: nu0 = (1/2pi) sqrt(int w''^2 / int w'^2) via the
  // time-domain spectral-moment identities (Parseval).
  const PulseShape s({3, 5.3, {}});
  const double i1 = oracle::trapezoid(
      [&](double t) {
        const double d = s.weighting_derivative(t);
        return d * d;
      },
      0.0, 20.0 * 5.3, 200000);
  const double i2 = oracle::trapezoid(
      [&](double t) {
        const double d = s.weighting_second_derivative(t);
        return d * d;
      },
      0.0, 20.0 * 5.3, 200000);
  const double kappa_td = 5.3 / (2.0 * M_PI) * std::sqrt(i2 / i1);
  CHECK(rice_kappa(s) == doctest::Approx(kappa_td).epsilon(1e-4));
}

TEST_CASE("rice constant from a tabulated spectrum") {
  const PulseShape s({3, 5.3, {}});
  std::vector<std::pair<double, double>> table;
  for (double f : linspace(0.0, 4.0, 6000))
    table.emplace_back(f, s.transfer_magnitude_sq(f));
  CHECK(rice_kappa_from_psd(table, 5.3) ==
        doctest::Approx(rice_kappa(s)).epsilon(1e-3));
}

TEST_CASE("rice fit: exact recovery and range policy") {
  const double sigma = 2.9;
  const double kappa = 0.47746482927568601;
  const double f0 = kappa / 5.3 * 1e3;  // MHz, so tp_est comes back as 5.3
  auto make_curve = [&](double lo, double hi, int n, double rel_err) {
    ScanCurve c;
    c.kind = ScanKind::noise_occupancy;
    for (double v : linspace(lo, hi, n)) {
      c.x.push_back(v);
      c.y.push_back(f0 * std::exp(-v * v / (2.0 * sigma * sigma)));
      c.y_err.push_back(c.y.back() * rel_err);
    }
    return c;
  };

  const ScanCurve exact = make_curve(0.0, 3.5 * sigma, 15, 0.05);
  const RiceFit fit = fit_rice(exact, PulseShape({3, 5.3, {}}));
  CHECK(fit.f0_mhz == doctest::Approx(f0).epsilon(1e-9));
  CHECK(fit.sigma_mv == doctest::Approx(sigma).epsilon(1e-9));
  CHECK(fit.peaking_time_est_ns == doctest::Approx(5.3).epsilon(1e-9));
  CHECK(fit.points_used == 15);
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));

  // Low-count tail points (under 10 effective counts) are excluded.
  ScanCurve tail = exact;
  tail.y_err.back() = tail.y.back();  // one effective count
  const RiceFit trimmed = fit_rice(tail, kappa);
  CHECK(trimmed.points_used == 14);
  CHECK(trimmed.sigma_mv == doctest::Approx(sigma).epsilon(1e-9));

  // Without near-zero thresholds the intercept is an extrapolation: reject.
  const ScanCurve offset_only = make_curve(2.0 * sigma, 3.5 * sigma, 8, 0.05);
  CHECK_THROWS_AS(fit_rice(offset_only, kappa), std::invalid_argument);

  // A rising curve has no positive fitted sigma.
  ScanCurve rising = exact;
  std::reverse(rising.y.begin(), rising.y.end());
  for (std::size_t i = 0; i < rising.y_err.size(); ++i)
    rising.y_err[i] = rising.y[i] * 0.05;
  CHECK_THROWS_AS(fit_rice(rising, kappa), std::runtime_error);

  CHECK_THROWS_AS(fit_rice(exact, PulseShape({1, 5.3, {}})), std::domain_error);
}

TEST_CASE("noise occupancy scan: mc rate curve matches the rice model") {
  const ChipConfig chip = nominal_chip_config(1);
  const ChannelSimulator sim(chip, 0);
  const double sigma = sim.noise_sigma_mv();
  const auto thresholds = linspace(0.0, 3.5 * sigma, 15);
  const double duration = 5.3e5;

  const ScanCurve curve =
      run_noise_occupancy(sim, thresholds, duration, 321, 2);
  const ScanCurve rerun =
      run_noise_occupancy(sim, thresholds, duration, 321, 1);
  CHECK(curve.y == rerun.y);  // jobs hint cannot change results
  CHECK_NOTHROW(curve.validate());

  const RiceFit fit = fit_rice(curve, sim.shape());
  CHECK(fit.sigma_mv == doctest::Approx(sigma).epsilon(0.05));
  CHECK(fit.peaking_time_est_ns == doctest::Approx(5.3).epsilon(0.10));
  CHECK(fit.r_squared > 0.99);
}

TEST_CASE("enc from output noise") {
  CHECK(enc_from_noise(2.9, 60.0) == doctest::Approx(301.6725).epsilon(1e-12));
  CHECK(enc_from_noise(0.0, 60.0) == 0.0);
  CHECK_THROWS_AS(enc_from_noise(2.9, 0.0), std::domain_error);
  CHECK_THROWS_AS(enc_from_noise(-1.0, 60.0), std::domain_error);
}

TEST_CASE("time walk: noiseless walk matches the root-finding oracle") {
  const ChipConfig chip = nominal_chip_config(1);
  NoiseSpec quiet;
  quiet.output_sigma_mv = 0.0;
  const ChannelSimulator sim(chip, 0, quiet);
  const std::vector<double> charges{1.2, 1.5, 2.0, 3.0, 4.5, 6.5, 9.0, 11.0};

  const TimeWalkResult tw = measure_time_walk(sim, charges, 1.0, 20, 17);
  // Frozen oracle: tp * (u(w=1/1.2) - u(w=1/11)) at tp = 5.3 ns.
  CHECK(tw.walk_ns == doctest::Approx(2.586882178266054).epsilon(0.01));
  CHECK(tw.walk_ns < 5.0);

  // Delays fall and widths grow monotonically with charge.
  for (std::size_t i = 1; i < tw.delays.y.size(); ++i) {
    CHECK(tw.delays.y[i] < tw.delays.y[i - 1]);
    CHECK(tw.tot_ns[i] > tw.tot_ns[i - 1]);
  }
  CHECK(tw.delays.kind == ScanKind::time_walk);

  // Per-charge crossing agrees with the independent bisection root.
  for (std::size_t i = 0; i < charges.size(); ++i) {
    const double t_root = oracle::bisect(
        [&](double t) {
          return charges[i] * 60.0 * sim.shape().weighting(t) - 60.0;
        },
        0.0, 5.3);
    CHECK(tw.delays.y[i] == doctest::Approx(t_root).epsilon(5e-3));
  }

  CHECK_THROWS_AS(measure_time_walk(sim, charges, 0.0, 20, 17),
                  std::invalid_argument);
  std::vector<double> unsorted{2.0, 1.2};
  CHECK_THROWS_AS(measure_time_walk(sim, unsorted, 1.0, 20, 17),
                  std::invalid_argument);
  std::vector<double> too_small{0.9, 2.0};
  CHECK_THROWS_AS(measure_time_walk(sim, too_small, 1.0, 20, 17),
                  std::invalid_argument);
}

TEST_CASE("scan curve csv: round trip and diagnostics") {
  ScanCurve c;
  c.kind = ScanKind::noise_occupancy;
  c.x = {0.0, 1.25, 2.5, 3.75};
  c.y = {90.09, 55.1234567891, 12.5, 0.19};
  c.y_err = {0.41, 0.32, 0.15, 0.019};

  std::stringstream ss;
  write_scan_csv(c, ss);
  CHECK(ss.str().substr(0, 15) == "x,y,y_err,kind\n");
  const ScanCurve back = read_scan_csv(ss);
  CHECK(back.kind == c.kind);
  REQUIRE(back.x.size() == c.x.size());
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    CHECK(back.x[i] == doctest::Approx(c.x[i]).epsilon(1e-9));
    CHECK(back.y[i] == doctest::Approx(c.y[i]).epsilon(1e-9));
    CHECK(back.y_err[i] == doctest::Approx(c.y_err[i]).epsilon(1e-9));
  }
  // A second trip is bit-stable (the %.10g rendering is a fixed point).
  std::stringstream s2, s3;
  write_scan_csv(back, s2);
  const ScanCurve twice = read_scan_csv(s2);
  write_scan_csv(twice, s3);
  std::stringstream s2_again;
  write_scan_csv(back, s2_again);
  CHECK(s3.str() == s2_again.str());

  std::stringstream bad_header("a,b,c\n1,2,3,threshold_scan\n");
  CHECK_THROWS_AS(read_scan_csv(bad_header), std::invalid_argument);
  std::stringstream short_row("x,y,y_err,kind\n1,2\n");
  CHECK_THROWS_WITH_AS(read_scan_csv(short_row), doctest::Contains("line 2"),
                       std::invalid_argument);
  std::stringstream mixed(
      "x,y,y_err,kind\n1,0.5,0.1,threshold_scan\n2,0.4,0.1,noise_occupancy\n");
  CHECK_THROWS_AS(read_scan_csv(mixed), std::invalid_argument);
  std::stringstream bad_num("x,y,y_err,kind\n1,zap,0.1,threshold_scan\n");
  CHECK_THROWS_AS(read_scan_csv(bad_num), std::invalid_argument);
}

TEST_CASE("scan kind names round trip") {
  for (ScanKind k : {ScanKind::threshold_scan, ScanKind::noise_occupancy,
                     ScanKind::time_walk})
    CHECK(scan_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(scan_kind_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("fit report: uniform shape and input-sensitive digest") {
  const ScanCurve a = synthetic_scurve(60.0, 2.9);
  ScanCurve b = a;
  b.y[4] += 1e-6;
  const auto ra = make_fit_report("scurve_erfc", {{"median_mv", 60.0}},
                                  {{"median_mv", 0.1}}, 1.02, a);
  const auto ra2 = make_fit_report("scurve_erfc", {{"median_mv", 60.0}},
                                   {{"median_mv", 0.1}}, 1.02, a);
  const auto rb = make_fit_report("scurve_erfc", {{"median_mv", 60.0}},
                                  {{"median_mv", 0.1}}, 1.02, b);
  CHECK(ra.at("kind").get<std::string>() == "scurve_erfc");
  CHECK(ra.at("chi2_ndf").get<double>() == doctest::Approx(1.02));
  CHECK(ra.at("inputs_digest") == ra2.at("inputs_digest"));
  CHECK(ra.at("inputs_digest") != rb.at("inputs_digest"));
  CHECK(ra.contains("params"));
  CHECK(ra.contains("errors"));
}
