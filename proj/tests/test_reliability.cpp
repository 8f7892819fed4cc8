#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "haptic_codesign/presets.hpp"
#include "haptic_codesign/reliability.hpp"

namespace {

using hcd::DelayCase;

TEST(QueuingThreshold, ReferenceAndClamped) {
  const hcd::LinkParams link;
  hcd::TaskSpec t = hcd::presets::critical_task();
  EXPECT_DOUBLE_EQ(hcd::queuing_threshold(t, link), 9.5);
  t.delay_bound_ms = 10.5;
  EXPECT_DOUBLE_EQ(hcd::queuing_threshold(t, link), 0.0);
  t.delay_bound_ms = 5.0;
  EXPECT_DOUBLE_EQ(hcd::queuing_threshold(t, link), 0.0);
}

TEST(ExperiencedDelay, ThreeCases) {
  const hcd::LinkParams link;
  const hcd::TaskSpec t = hcd::presets::critical_task();
  auto a = hcd::experienced_delay(15.0, t, link);
  EXPECT_EQ(a.delay_case, DelayCase::on_time);
  EXPECT_EQ(a.delay_ms, 15.0);
  EXPECT_FALSE(a.horizon_ms.has_value());
  EXPECT_EQ(hcd::experienced_delay(20.0, t, link).delay_case, DelayCase::on_time);
  auto b = hcd::experienced_delay(30.0, t, link);
  EXPECT_EQ(b.delay_case, DelayCase::predicted);
  EXPECT_EQ(b.delay_ms, 20.0);
  EXPECT_EQ(*b.horizon_ms, 10.0);
  auto c = hcd::experienced_delay(70.0, t, link);
  EXPECT_EQ(c.delay_case, DelayCase::predicted);
  EXPECT_EQ(*c.horizon_ms, 50.0);
  auto d = hcd::experienced_delay(80.0, t, link);
  EXPECT_EQ(d.delay_case, DelayCase::late);
  EXPECT_EQ(d.delay_ms, 30.0);
  EXPECT_THROW(hcd::experienced_delay(-1.0, t, link), std::domain_error);
}

TEST(Bound, ReferenceComposition) {
  const hcd::LinkParams link;
  const hcd::TaskSpec t = hcd::presets::critical_task();
  const hcd::TradeoffTable table = hcd::presets::stipulated_table();
  const hcd::ErrorBreakdown e = hcd::overall_error_bound(t, link, table, 140.0, 256.0);
  EXPECT_NEAR(e.eps_d, 1.540361997210757e-6, 1e-17);
  EXPECT_NEAR(e.fq_dth, 2.0352273983174e-6, 1e-17);
  EXPECT_NEAR(e.fq_dth_tth / 2.2591455e-36, 1.0, 1e-6);
  const double p_ch = std::pow(10.0, -0.09), p_th = std::pow(10.0, -0.01);
  EXPECT_NEAR(e.eps_p_ch, p_ch, 1e-14);
  EXPECT_NEAR(e.eps_p_tth, p_th, 1e-14);
  const double total = p_ch * e.eps_d * (1.0 - e.fq_dth) + p_th * (e.fq_dth - e.fq_dth_tth) + e.fq_dth_tth;
  EXPECT_NEAR(e.total, total, 1e-15 * total);
  EXPECT_EQ(e.total, e.term1 + e.term2 + e.term3);
  EXPECT_DOUBLE_EQ(e.queuing_threshold_ms, 9.5);
  EXPECT_FALSE(e.table_clamped);
}

TEST(Bound, ZeroThresholdCollapses) {
  hcd::LinkParams link;
  hcd::TaskSpec t = hcd::presets::critical_task();
  t.delay_bound_ms = 8.0;
  const hcd::TradeoffTable table = hcd::presets::stipulated_table();
  const hcd::ErrorBreakdown e = hcd::overall_error_bound(t, link, table, 140.0, 256.0);
  EXPECT_EQ(e.fq_dth, 1.0);
  EXPECT_EQ(e.term1, 0.0);
  EXPECT_NEAR(e.total, e.eps_p_tth * (1.0 - e.fq_dth_tth) + e.fq_dth_tth, 1e-16);
}

TEST(Bound, PerfectPredictorLeavesQueueTail) {
  const hcd::LinkParams link;
  const hcd::TaskSpec t = hcd::presets::critical_task();
  const hcd::TradeoffTable zero({0.0, 100.0}, {0.01, 10.0}, {0.0, 0.0, 0.0, 0.0});
  const hcd::ErrorBreakdown e = hcd::overall_error_bound(t, link, zero, 32.19, 92.0);
  EXPECT_EQ(e.total, e.fq_dth_tth);
  EXPECT_NEAR(e.fq_dth_tth, 4.90443066744387e-6, 1e-17);
}

TEST(Bound, GivenDecodingMatchesLinkPath) {
  const hcd::LinkParams link;
  const hcd::TaskSpec t = hcd::presets::non_critical_task();
  const hcd::TradeoffTable table = hcd::presets::stipulated_table();
  const double eps_d = hcd::avg_decoding_error(link, 50.0, 120.0);
  EXPECT_EQ(hcd::overall_error_bound(t, link, table, 50.0, 120.0).total,
            hcd::error_bound_given_decoding(t, link, table, eps_d, 120.0).total);
  EXPECT_THROW(hcd::error_bound_given_decoding(t, link, table, 1.5, 120.0), std::domain_error);
}

TEST(Bound, ProbabilityOnRandomInputs) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double fq1 = u(rng), fq2 = fq1 * u(rng);
    const hcd::ErrorBreakdown e = hcd::compose_bound(u(rng), fq1, fq2, u(rng), u(rng));
    EXPECT_GE(e.term1, 0.0);
    EXPECT_GE(e.term2, 0.0);
    EXPECT_GE(e.term3, 0.0);
    EXPECT_LE(e.total, 1.0 + 1e-15);
  }
}

TEST(Bound, MonotoneInEachComponent) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double ed = u(rng), fq1 = u(rng), fq2 = fq1 * u(rng), pc = u(rng), pt = u(rng);
    const double base = hcd::compose_bound(ed, fq1, fq2, pc, pt).total;
    const double step = 0.01;
    EXPECT_GE(hcd::compose_bound(std::min(ed + step, 1.0), fq1, fq2, pc, pt).total, base);
    EXPECT_GE(hcd::compose_bound(ed, fq1, fq2, std::min(pc + step, 1.0), pt).total, base);
    EXPECT_GE(hcd::compose_bound(ed, fq1, fq2, pc, std::min(pt + step, 1.0)).total, base);
    EXPECT_GE(hcd::compose_bound(ed, fq1, std::min(fq2 + step, fq1), pc, pt).total, base - 1e-15);
  }
}

TEST(Placement, SeriesVersusParallel) {
  const auto p = hcd::placement_compare(1e-2, 1e-3);
  EXPECT_NEAR(p.eps_tx, 1.099e-2, 1e-15);
  EXPECT_NEAR(p.eps_rx, 1e-5, 1e-18);
  EXPECT_LE(p.eps_rx, p.eps_tx);
  EXPECT_THROW(hcd::placement_compare(-0.1, 0.5), std::domain_error);
}

// Error bound against the delay requirement with a fixed decoding error:
// flat while the queuing threshold is zero, then falling, then flat again.
TEST(Bound, DelayRequirementShape) {
  const hcd::LinkParams link;
  const hcd::TradeoffTable table = hcd::presets::stipulated_table();
  for (hcd::TaskSpec t : {hcd::presets::critical_task(), hcd::presets::non_critical_task()}) {
    auto eps_at = [&](double dmax) {
      t.delay_bound_ms = dmax;
      return hcd::error_bound_given_decoding(t, link, table, 1e-5, 268.0).total;
    };
    const double plateau = eps_at(1.0);
    for (double d = 0.5; d <= 10.5; d += 0.5) EXPECT_EQ(eps_at(d), plateau) << d;
    EXPECT_NEAR(plateau, table.lookup(link.horizon_cap_ms, t.jnd_threshold_pct).value, 1e-30 + 1e-12);
    double prev = plateau;
    for (double d = 11.0; d <= 25.0; d += 0.5) {
      const double e = eps_at(d);
      EXPECT_LT(e, prev) << d;
      prev = e;
    }
    double lo = 1.0, hi = 0.0;
    for (double d = 30.0; d <= 50.0; d += 0.5) {
      lo = std::min(lo, eps_at(d));
      hi = std::max(hi, eps_at(d));
    }
    EXPECT_LT((hi - lo) / lo, 0.01);
  }
}

}  // namespace
