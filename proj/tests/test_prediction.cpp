#include <cmath>
#include <numbers>
#include <stdexcept>

#include <gtest/gtest.h>

#include "haptic_codesign/prediction.hpp"

namespace {

using hcd::TrajectoryDataset;

TrajectoryDataset from_positions(const std::vector<std::vector<double>>& seqs) {
  TrajectoryDataset d;
  double lo = seqs[0][0], hi = lo;
  for (const auto& q : seqs) {
    d.sequences.push_back({q, std::vector<double>(q.size(), 0.0)});
    for (double x : q) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  d.range_norm = hi > lo ? hi - lo : 1.0;
  return d;
}

TEST(Generator, DeterministicPerSeed) {
  const auto a = hcd::generate_trajectories(3, 2000, 42);
  const auto b = hcd::generate_trajectories(3, 2000, 42);
  const auto c = hcd::generate_trajectories(3, 2000, 43);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(a.sequences[s].position, b.sequences[s].position);
    EXPECT_EQ(a.sequences[s].velocity, b.sequences[s].velocity);
    EXPECT_NE(a.sequences[s].position, c.sequences[s].position);
  }
  EXPECT_NE(a.sequences[0].position, a.sequences[1].position);
  EXPECT_EQ(a.range_norm, b.range_norm);
}

TEST(Generator, SequencesIndependentOfCount) {
  const auto small = hcd::generate_trajectories(2, 1000, 9);
  const auto large = hcd::generate_trajectories(5, 1000, 9);
  EXPECT_EQ(small.sequences[1].position, large.sequences[1].position);
}

TEST(Generator, ZeroNoiseOuIsConstant) {
  hcd::GeneratorParams p;
  p.ou_sigma = 0.0;
  const auto d = hcd::generate_trajectories(2, 1000, 1, p);
  for (const auto& tr : d.sequences) {
    for (double q : tr.position) EXPECT_EQ(q, p.position_offset);
  }
  EXPECT_EQ(d.range_norm, 1.0);
}

TEST(Generator, OuMeanReversionRateRecovered) {
  hcd::GeneratorParams p;
  p.ou_theta = 20.0;
  const auto d = hcd::generate_trajectories(50, 10000, 5, p);
  double sxy = 0.0, sxx = 0.0;
  for (const auto& tr : d.sequences) {
    for (std::size_t t = 1; t < tr.velocity.size(); ++t) {
      sxy += tr.velocity[t] * tr.velocity[t - 1];
      sxx += tr.velocity[t - 1] * tr.velocity[t - 1];
    }
  }
  const double theta_hat = -std::log(sxy / sxx) * hcd::kSampleRateHz;
  EXPECT_NEAR(theta_hat, 20.0, 1.0);
}

TEST(Generator, PositionIntegratesVelocity) {
  const auto d = hcd::generate_trajectories(1, 1000, 2);
  const auto& tr = d.sequences[0];
  for (std::size_t t = 1; t < 1000; ++t) {
    EXPECT_NEAR(tr.position[t] - tr.position[t - 1], tr.velocity[t - 1] / hcd::kSampleRateHz, 1e-14);
  }
}

TEST(Generator, SinusoidVelocityMatchesDerivative) {
  hcd::GeneratorParams p;
  p.process = hcd::TrajectoryProcess::sinusoid_mix;
  const auto d = hcd::generate_trajectories(1, 1000, 8, p);
  const auto& tr = d.sequences[0];
  for (std::size_t t = 1; t + 1 < 1000; t += 50) {
    const double fd = (tr.position[t + 1] - tr.position[t - 1]) * hcd::kSampleRateHz / 2.0;
    EXPECT_NEAR(fd, tr.velocity[t], 1e-2 * (1.0 + std::abs(tr.velocity[t])));
  }
}

TEST(Generator, RejectsBadArguments) {
  EXPECT_THROW(hcd::generate_trajectories(0, 1000, 1), std::invalid_argument);
  EXPECT_THROW(hcd::generate_trajectories(1, 999, 1), std::invalid_argument);
  hcd::GeneratorParams p;
  p.ou_theta = 0.0;
  EXPECT_THROW(hcd::generate_trajectories(1, 1000, 1, p), std::invalid_argument);
}

TEST(Rrmse, KnownValues) {
  const std::vector<double> truth{1.0, 2.0, 3.0};
  EXPECT_EQ(hcd::rrmse(truth, truth), 0.0);
  const std::vector<double> shifted{1.1, 2.1, 3.1};
  EXPECT_NEAR(hcd::rrmse(shifted, truth), 5.0, 1e-12);
  const std::vector<double> zero_mean{-1.0, 1.0};
  EXPECT_THROW(hcd::rrmse(zero_mean, zero_mean), std::domain_error);
  EXPECT_THROW(hcd::rrmse(truth, zero_mean), std::invalid_argument);
}

TEST(FitPredictor, AffineDataIsExactForOrderTwo) {
  std::vector<std::vector<double>> seqs;
  for (int s = 0; s < 5; ++s) {
    std::vector<double> q(1000);
    for (std::size_t t = 0; t < q.size(); ++t) q[t] = 1.0 + 0.001 * (s + 1) * static_cast<double>(t);
    seqs.push_back(q);
  }
  const auto model = hcd::fit_predictor(from_positions(seqs), 200, 50, 2);
  EXPECT_NEAR(model.coefficients[0], 2.0, 1e-12);
  EXPECT_NEAR(model.coefficients[1], -1.0, 1e-12);
  EXPECT_LT(model.train_rrmse, 1e-9);
  EXPECT_LT(model.validation_rrmse, 1e-9);
}

TEST(FitPredictor, SinusoidIsExactForOrderThree) {
  const double omega = 2.0 * std::numbers::pi * 10.0 / hcd::kSampleRateHz;
  std::vector<std::vector<double>> seqs;
  for (int s = 0; s < 5; ++s) {
    std::vector<double> q(1000);
    for (std::size_t t = 0; t < q.size(); ++t) {
      q[t] = 2.0 + (0.3 + 0.1 * s) * std::sin(omega * static_cast<double>(t) + 0.7 * s);
    }
    seqs.push_back(q);
  }
  const auto model = hcd::fit_predictor(from_positions(seqs), 200, 100, 3);
  const double c = 1.0 + 2.0 * std::cos(omega);
  EXPECT_NEAR(model.coefficients[0], c, 1e-12);
  EXPECT_NEAR(model.coefficients[1], -c, 1e-12);
  EXPECT_NEAR(model.coefficients[2], 1.0, 1e-12);
  EXPECT_LT(model.validation_rrmse, 1e-9);
}

TEST(FitPredictor, RankDeficiencyNamesALag) {
  std::vector<std::vector<double>> seqs;
  for (int s = 0; s < 3; ++s) {
    std::vector<double> q(1000);
    for (std::size_t t = 0; t < q.size(); ++t) q[t] = 1.0 + 0.002 * s * static_cast<double>(t) + s;
    seqs.push_back(q);
  }
  try {
    hcd::fit_predictor(from_positions(seqs), 200, 50, 3);
    FAIL() << "expected rank deficiency";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("lag-"), std::string::npos) << e.what();
  }
}

TEST(FitPredictor, ValidationCloseToTraining) {
  const auto data = hcd::generate_trajectories(20, 5000, 17);
  const auto model = hcd::fit_predictor(data, 500, 100, 4);
  EXPECT_GT(model.train_rrmse, 0.0);
  EXPECT_NEAR(model.validation_rrmse, model.train_rrmse, 0.2 * model.train_rrmse);
  EXPECT_EQ(model.training_fingerprints.size(), 16u);
}

TEST(FitPredictor, ArgumentChecks) {
  const auto data = hcd::generate_trajectories(4, 1000, 1);
  EXPECT_THROW(hcd::fit_predictor(data, 500, 100, 0), std::invalid_argument);
  EXPECT_THROW(hcd::fit_predictor(data, 500, 0, 2), std::invalid_argument);
  EXPECT_THROW(hcd::fit_predictor(data, 900, 200, 2), std::invalid_argument);
  const auto one = hcd::generate_trajectories(1, 1000, 1);
  EXPECT_THROW(hcd::fit_predictor(one, 500, 100, 2), std::invalid_argument);
}

TEST(Predict, RolloutUsesLatestSamples) {
  hcd::PredictorModel m;
  m.order = 1;
  m.coefficients = {0.5};
  m.history_len = 3;
  m.horizon_len = 3;
  const std::vector<double> hist{9.0, 9.0, 8.0};
  EXPECT_EQ(hcd::predict(m, hist), (std::vector<double>{4.0, 2.0, 1.0}));
  const std::vector<double> wrong{1.0};
  EXPECT_THROW(hcd::predict(m, wrong), std::invalid_argument);
}

class Estimate : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new TrajectoryDataset(hcd::generate_trajectories(20, 8000, 23));
    model_ = new hcd::PredictorModel(hcd::fit_predictor(*data_, 500, 100, 4));
    test_ = new TrajectoryDataset(hcd::held_out(*data_));
  }
  static void TearDownTestSuite() {
    delete data_;
    delete model_;
    delete test_;
  }
  static TrajectoryDataset* data_;
  static hcd::PredictorModel* model_;
  static TrajectoryDataset* test_;
};
TrajectoryDataset* Estimate::data_ = nullptr;
hcd::PredictorModel* Estimate::model_ = nullptr;
TrajectoryDataset* Estimate::test_ = nullptr;

TEST_F(Estimate, CountsMatchBruteForce) {
  const std::vector<double> hs{1, 10, 50, 100};
  const std::vector<double> ds{0.1, 1.0, 5.0};
  hcd::EstimateOptions opt;
  opt.window_stride = 50;
  const auto est = hcd::estimate_error_prob(*model_, *test_, hs, ds, opt);

  std::vector<std::uint64_t> counts(hs.size() * ds.size(), 0);
  std::uint64_t windows = 0;
  for (const auto& tr : test_->sequences) {
    const auto& q = tr.position;
    for (std::size_t e = 499; e + 100 < q.size(); e += 50) {
      ++windows;
      const std::vector<double> hist(q.begin() + static_cast<std::ptrdiff_t>(e - 499),
                                     q.begin() + static_cast<std::ptrdiff_t>(e + 1));
      const auto pred = hcd::predict(*model_, hist);
      for (std::size_t h = 0; h < hs.size(); ++h) {
        const auto k = static_cast<std::size_t>(hs[h]);
        for (std::size_t d = 0; d < ds.size(); ++d) {
          if (std::abs(pred[k - 1] - q[e + k]) > ds[d] / 100.0 * data_->range_norm) {
            ++counts[h * ds.size() + d];
          }
        }
      }
    }
  }
  EXPECT_EQ(est.windows, windows);
  EXPECT_EQ(est.exceed_counts, counts);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    EXPECT_DOUBLE_EQ(est.raw.eps()[i], static_cast<double>(counts[i]) / static_cast<double>(windows));
  }
  EXPECT_TRUE(est.table.is_monotone());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    EXPECT_GE(est.table.eps()[i], 1.0 / (10.0 * static_cast<double>(windows)));
  }
}

TEST_F(Estimate, ExtremeThresholds) {
  const std::vector<double> hs{1, 100};
  const auto huge = hcd::estimate_error_prob(*model_, *test_, hs, {1e6});
  for (std::size_t h = 0; h < 2; ++h) {
    EXPECT_EQ(huge.raw.at(h, 0), 0.0);
    EXPECT_DOUBLE_EQ(huge.table.at(h, 0), 1.0 / (10.0 * static_cast<double>(huge.windows)));
    EXPECT_TRUE(huge.table.floored()[huge.table.index(h, 0)]);
  }
  const auto tiny = hcd::estimate_error_prob(*model_, *test_, hs, {1e-9});
  EXPECT_GT(tiny.raw.at(1, 0), 0.99);
}

TEST_F(Estimate, RejectsTooFewWindowsAndOverlap) {
  hcd::EstimateOptions sparse;
  sparse.window_stride = 5000;
  EXPECT_THROW(hcd::estimate_error_prob(*model_, *test_, {10}, {1.0}, sparse), std::invalid_argument);
  EXPECT_THROW(hcd::estimate_error_prob(*model_, *data_, {10}, {1.0}), std::invalid_argument);
  EXPECT_THROW(hcd::estimate_error_prob(*model_, *test_, {0.5}, {1.0}), std::invalid_argument);
  EXPECT_THROW(hcd::estimate_error_prob(*model_, *test_, {101}, {1.0}), std::invalid_argument);
}

TEST_F(Estimate, ErrorGrowsWithHorizon) {
  const auto est = hcd::estimate_error_prob(*model_, *test_, {1, 20, 100}, {0.5});
  EXPECT_LT(est.raw.at(0, 0), est.raw.at(2, 0));
}

}  // namespace
