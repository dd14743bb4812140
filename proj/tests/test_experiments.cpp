#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace stirap;

namespace {

SweepSpec peak_sweep(std::vector<double> grid) {
  SweepSpec s;
  s.swept = SweptParameter::PeakRabi;
  s.grid = std::move(grid);
  s.base_descriptor = testing_support::flagship();
  return s;
}

std::string csv_of(const std::vector<SweepRecord>& r, std::string_view name = "omega0") {
  std::ostringstream os;
  write_sweep_csv(os, name, r);
  return os.str();
}

}  // namespace

TEST(Experiments, InfidelityDefinitions) {
  PropagationResult<3> r;
  r.final.c << Complex(0.6, 0), 0, Complex(0, -0.8);
  EXPECT_NEAR(transfer_infidelity(r), 1 - 0.64, 1e-15);
  EXPECT_NEAR(superposition_infidelity(r, std::numbers::pi / 2), 1 - 0.64, 1e-12);
  EXPECT_NEAR(superposition_infidelity(r, 0.0), 1 - 0.36, 1e-15);
  r.final.c << std::sqrt(0.5), 0, -std::sqrt(0.5);
  EXPECT_NEAR(superposition_infidelity(r, std::numbers::pi / 4), 0.0, 1e-15);
}

TEST(Experiments, SinglePointSweepMatchesDirectPropagation) {
  const auto rec = run_sweep(peak_sweep({20.0}), {}, 1);
  ASSERT_EQ(rec.size(), 1u);
  SystemParams p;
  const auto r = propagate<3>(testing_support::flagship(), p, basis_state<3>(-10, 0), {});
  EXPECT_EQ(rec[0].infidelity, transfer_infidelity(r));
  EXPECT_EQ(rec[0].p3, std::norm(r.final.c(2)));
  EXPECT_EQ(rec[0].status, "ok");
}

TEST(Experiments, SweepIsIndependentOfWorkerCount) {
  const auto spec = peak_sweep(linspace(5, 25, 9));
  const auto one = csv_of(run_sweep(spec, {}, 1));
  EXPECT_EQ(one, csv_of(run_sweep(spec, {}, 3)));
  EXPECT_EQ(one, csv_of(run_sweep(spec, {}, 8)));
}

TEST(Experiments, CsvLayout) {
  const auto rec = run_sweep(peak_sweep({10.0, 20.0}), {}, 1);
  const auto csv = csv_of(rec, "omega0");
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "omega0,p1,p2,p3,infidelity,norm_loss,status");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "ok");
  }
  EXPECT_EQ(rows, 2);
  EXPECT_EQ(format_number(0.1), "1.0000000000000001e-01");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Experiments, FailedPointIsRecordedNotThrown) {
  SweepSpec spec = peak_sweep({20.0});
  spec.base_params.window = {-2, 2};
  const auto rec = run_sweep(spec, {}, 1);
  EXPECT_EQ(rec[0].status, "WindowTooNarrow");
  EXPECT_TRUE(std::isnan(rec[0].infidelity));
}

TEST(Experiments, SweepValidation) {
  EXPECT_THROW(run_sweep(peak_sweep({}), {}), Error);
  EXPECT_THROW(run_sweep(peak_sweep({2, 1}), {}), Error);
  EXPECT_THROW(run_sweep(peak_sweep({-1, 1}), {}), Error);
  SweepSpec s = peak_sweep({1});
  s.base_descriptor = PulseDescriptor(LandauZener{});
  EXPECT_THROW(run_sweep(s, {}), Error);
}

TEST(Experiments, DetuningSweepsTouchOnlyParams) {
  SweepSpec s = peak_sweep({-1.0, 0.0, 1.0});
  s.swept = SweptParameter::TwoPhotonDetuning;
  const auto rec = run_sweep(s, {}, 1);
  EXPECT_LT(rec[1].infidelity, rec[0].infidelity);
  EXPECT_LT(rec[1].infidelity, rec[2].infidelity);
  s.swept = SweptParameter::MaskWidth;
  s.grid = {1.5, 2.0, 2.5};
  for (const auto& r : run_sweep(s, {}, 1)) EXPECT_EQ(r.status, "ok");
}

TEST(Experiments, HighFidelityWidthAndArgmin) {
  std::vector<SweepRecord> r(7);
  const double inf[] = {1e-2, 1e-5, 1e-6, 1e-7, 1e-6, 1e-3, 1e-8};
  for (int i = 0; i < 7; ++i) r[i].value = i - 3, r[i].infidelity = inf[i];
  EXPECT_EQ(high_fidelity_width(r, 1e-4, 0.0), 3.0);
  EXPECT_EQ(argmin_infidelity(r), 3.0);
  EXPECT_EQ(high_fidelity_width(r, 1e-9, 0.0), 0.0);
  r[3].status = "StepUnderflow";
  EXPECT_EQ(high_fidelity_width(r, 1e-4, 0.0), 0.0);
}

TEST(Experiments, LocateBreakdown) {
  std::vector<double> area{1, 2, 3, 4, 5, 6};
  std::vector<double> inf{1e-1, 1e-3, 1e-5, 1e-4, 1e-6, 1e-5};
  const auto rep = locate_breakdown(area, inf);
  EXPECT_EQ(rep.breakdown_index, 2u);
  EXPECT_EQ(rep.breakdown_area, 3.0);
  EXPECT_TRUE(rep.monotone_before);
  try {
    locate_breakdown({1, 2, 3, 4}, {1e-1, 1e-2, 1e-3, 1e-4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoBreakdownDetected);
  }
  EXPECT_THROW(locate_breakdown({1, 2}, {1, 2}), Error);
}

TEST(Experiments, BreakdownScanReportsAreaRatio) {
  SystemParams p;
  const auto rep = breakdown_scan(testing_support::flagship(), p, linspace(5, 40, 36), {}, 2);
  const auto unit = areas(with_peak(testing_support::flagship(), 1.0), p.window);
  EXPECT_NEAR(rep.area_ratio, unit.ratio, 1e-15);
  EXPECT_NEAR(rep.breakdown_peak * unit.rms, rep.breakdown_area, 1e-12);
  EXPECT_GT(rep.breakdown_area, 0.0);
}

TEST(Experiments, RwaErrorEstimate) {
  EXPECT_DOUBLE_EQ(rwa_error_estimate(1e16, 1e9, 1e-6), 1e-8);
  EXPECT_DOUBLE_EQ(rwa_error_estimate(1e16, 1e8, 1e-8), 1e-16);
  EXPECT_EQ(rwa_error_estimate(1e16, 0.0, 1e-6), 0.0);
  EXPECT_THROW(rwa_error_estimate(0, 1, 1), Error);
}

TEST(Experiments, Linspace) {
  const auto v = linspace(-20, 20, 200);
  EXPECT_EQ(v.size(), 200u);
  EXPECT_EQ(v.front(), -20.0);
  EXPECT_EQ(v.back(), 20.0);
  EXPECT_EQ(linspace(3, 7, 1), std::vector<double>{3});
  EXPECT_THROW(linspace(0, 1, 0), Error);
}

TEST(Experiments, GnuplotScriptNamesColumns) {
  const auto s = gnuplot_script("run.csv", "delta");
  EXPECT_NE(s.find("'run.csv'"), std::string::npos);
  EXPECT_NE(s.find("xlabel 'delta'"), std::string::npos);
  EXPECT_NE(s.find("using 1:5"), std::string::npos);
}
