#include "trajgen/decoder.hpp"
#include "trajgen/gradcheck.hpp"

#include <gtest/gtest.h>

namespace trajgen {
namespace {

using Mat = Matrix<double>;

Decoder<double> small_decoder(int context = 3, int hidden = 4, std::uint64_t seed = 1) {
  DecoderConfig cfg;
  cfg.hidden = hidden;
  Decoder<double> dec(context, cfg);
  Rng rng(seed);
  dec.init_parameters(rng);
  return dec;
}

Mat random_mat(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

TEST(Rollout, ZeroResidualMapStaysAtOrigin) {
  auto dec = small_decoder();
  dec.residual.weight.value.setZero();
  Tape<double> t(false);
  Rng rng(2);
  const auto r = rollout(bind(t, dec), t.constant(random_mat(2, 3, rng)),
                         t.constant(random_mat(2, 2, rng)), 12);
  ASSERT_EQ(r.positions.size(), 13u);
  ASSERT_EQ(r.residuals.size(), 12u);
  for (const auto& p : r.positions) EXPECT_EQ(p.value(), Mat::Zero(2, 2));
}

TEST(Rollout, ConstantResidualWalksStraight) {
  auto dec = small_decoder();
  dec.residual.weight.value.setZero();
  dec.residual.bias.value << 0.4, 0.0;
  Tape<double> t(false);
  const auto r = rollout(bind(t, dec), t.constant(Mat::Zero(1, 3)), t.constant(Mat::Zero(1, 2)), 12);
  EXPECT_NEAR(r.positions.back().value()(0, 0), 4.8, 1e-12);
  EXPECT_EQ(r.positions.back().value()(0, 1), 0.0);
  const Mat fut = r.future().value();
  EXPECT_EQ(fut.cols(), 24);
  EXPECT_NEAR(fut(0, 2), 0.8, 1e-15);
}

TEST(Rollout, PositionsAreRunningSumsOfResiduals) {
  auto dec = small_decoder();
  Rng rng(3);
  Tape<double> t(false);
  const auto r = rollout(bind(t, dec), t.constant(random_mat(3, 3, rng)),
                         t.constant(random_mat(3, 2, rng)), 7);
  for (std::size_t k = 0; k < r.residuals.size(); ++k) {
    const Mat expected = r.positions[k].value() + r.residuals[k].value();
    EXPECT_EQ(r.positions[k + 1].value(), expected) << k;
  }
}

TEST(Rollout, RespondsToDestination) {
  auto dec = small_decoder();
  Rng rng(4);
  const Mat ctx = random_mat(1, 3, rng);
  Tape<double> t(false);
  const auto b = bind(t, dec);
  const Mat a = rollout(b, t.constant(ctx), t.constant((Mat(1, 2) << 2, 2).finished()), 5).future().value();
  const Mat c = rollout(b, t.constant(ctx), t.constant((Mat(1, 2) << 2, -2).finished()), 5).future().value();
  EXPECT_GT((a - c).norm(), 1e-3);
}

TEST(Rollout, ZeroInitialStateOption) {
  DecoderConfig cfg;
  cfg.hidden = 4;
  cfg.init_from_context = false;
  Decoder<double> dec(3, cfg);
  Rng rng(5);
  dec.init_parameters(rng);
  dec.init.bias.value.setConstant(5.0);  // ignored when the state starts at zero
  Tape<double> t(false);
  const Mat ctx = random_mat(2, 3, rng), d = random_mat(2, 2, rng);
  const Mat a = rollout(bind(t, dec), t.constant(ctx), t.constant(d), 4).future().value();
  dec.init.bias.value.setZero();
  const Mat b = rollout(bind(t, dec), t.constant(ctx), t.constant(d), 4).future().value();
  EXPECT_EQ(a, b);
}

TEST(Rollout, RejectsBadArguments) {
  auto dec = small_decoder();
  Tape<double> t;
  const auto b = bind(t, dec);
  EXPECT_THROW(rollout(b, t.constant(Mat::Zero(1, 3)), t.constant(Mat::Zero(1, 2)), 0), Error);
  EXPECT_THROW(rollout(b, t.constant(Mat::Zero(1, 4)), t.constant(Mat::Zero(1, 2)), 3), ShapeError);
  EXPECT_THROW(rollout(b, t.constant(Mat::Zero(2, 3)), t.constant(Mat::Zero(1, 2)), 3), ShapeError);
}

TEST(Huber, ReconstructionExamples) {
  auto dec = small_decoder();
  dec.residual.weight.value.setZero();
  Tape<double> t(false);
  const auto r = rollout(bind(t, dec), t.constant(Mat::Zero(1, 3)), t.constant(Mat::Zero(1, 2)), 1);
  // Prediction is the origin: quadratic branch 0.5 * 0.3^2, linear branch 3 - 0.5.
  EXPECT_NEAR(huber_reconstruction_loss(r, t.constant((Mat(1, 2) << 0.3, 0).finished()), 1.0).item(),
              0.045, 1e-15);
  EXPECT_NEAR(huber_reconstruction_loss(r, t.constant((Mat(1, 2) << 0, -3).finished()), 1.0).item(),
              2.5, 1e-15);
  EXPECT_THROW(huber_reconstruction_loss(r, t.constant(Mat::Zero(1, 4)), 1.0), ShapeError);
  EXPECT_THROW(huber_reconstruction_loss(r, t.constant(Mat::Zero(1, 2)), 0.0), Error);
}

TEST(Huber, AveragesOverAgentsAndSteps) {
  auto dec = small_decoder();
  dec.residual.weight.value.setZero();
  Tape<double> t(false);
  const auto r = rollout(bind(t, dec), t.constant(Mat::Zero(2, 3)), t.constant(Mat::Zero(2, 2)), 2);
  Mat target = Mat::Zero(2, 4);
  target(1, 3) = 3.0;
  EXPECT_NEAR(huber_reconstruction_loss(r, t.constant(target), 1.0).item(), 2.5 / 4, 1e-15);
}

TEST(DecoderGradients, PassFiniteDifferences) {
  for (bool from_context : {true, false}) {
    DecoderConfig cfg;
    cfg.hidden = 3;
    cfg.init_from_context = from_context;
    Decoder<double> dec(2, cfg);
    Rng rng(6);
    dec.init_parameters(rng);
    const Mat ctx = random_mat(2, 2, rng), d = random_mat(2, 2, rng), target = random_mat(2, 8, rng);
    std::vector<Parameter<double>*> params;
    dec.for_each_parameter([&](Parameter<double>& p) { params.push_back(&p); });
    auto loss = [&](Tape<double>& t) {
      const auto r = rollout(bind(t, dec), t.constant(ctx), t.constant(d), 4);
      return huber_reconstruction_loss(r, t.constant(2.0 * target), 1.0);
    };
    const auto report = finite_difference_check<double>(loss, params, 1e-6);
    EXPECT_LT(report.max_relative_error, 1e-6) << report.worst_parameter;
  }
}

}  // namespace
}  // namespace trajgen
