#include "doctest.h"

#include <cmath>

#include "gkmm/assembly.hpp"
#include "gkmm/estimators.hpp"
#include "gkmm/kernels.hpp"
#include "gkmm/synthlab.hpp"
#include "oracles.hpp"

using namespace gkmm;

namespace {

PartitionedData single_block(const Eigen::MatrixXd& m) {
  PartitionedData pd;
  pd.blocks.push_back(m);
  pd.weights = Eigen::VectorXd::Ones(1);
  return pd;
}

Eigen::MatrixXd gaussian_matrix(int n, int d, double mean, double stdev,
                                RngStream& rng) {
  Eigen::MatrixXd m(n, d);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = mean + stdev * rng.gaussian();
  return m;
}

}  // namespace

TEST_CASE("evaluate_ratio basics and scalar-loop agreement") {
  RngStream rng(31);
  DensityRatioModel model;
  model.basis = gaussian_matrix(6, 2, 0.0, 1.0, rng);
  model.kernel.sigma = 0.7;

  model.theta = Eigen::VectorXd::Zero(6);
  Eigen::MatrixXd X = gaussian_matrix(4, 2, 0.5, 1.0, rng);
  CHECK(evaluate_ratio(model, X).lpNorm<Eigen::Infinity>() == 0.0);

  model.theta = Eigen::VectorXd::Unit(6, 2);
  const Eigen::VectorXd r = evaluate_ratio(model, X);
  for (int i = 0; i < 4; ++i) {
    CHECK(r[i] == doctest::Approx(kernel_eval(X.row(i).transpose(),
                                              model.basis.row(2).transpose(),
                                              model.kernel))
                      .epsilon(1e-14));
  }

  for (int k = 0; k < 6; ++k) model.theta[k] = rng.uniform();
  const Eigen::VectorXd rr = evaluate_ratio(model, X);
  for (int i = 0; i < 4; ++i) {
    const double ref = oracles::ratio_at(X.row(i).transpose(), model.theta,
                                         model.basis, model.kernel);
    CHECK(std::abs(rr[i] - ref) <= 1e-12);
  }

  CHECK_THROWS_AS(evaluate_ratio(model, Eigen::MatrixXd::Zero(2, 3)), Error);
}

TEST_CASE("fit_gkmm keeps the mean ratio inside the slab") {
  RngStream rng(47);
  const Eigen::MatrixXd pts = gaussian_matrix(50, 1, 0.0, 1.0, rng);
  KernelConfig cfg;  // default sigma
  const FitReport report = fit_gkmm(single_block(pts), single_block(pts), cfg);
  const double eps = default_eps(50);

  const GkmmProblem p = assemble(single_block(pts), single_block(pts), cfg,
                                 1000.0, eps);
  const double slab = p.xi.dot(report.solution.theta);
  CHECK(slab >= 1.0 - eps - 0.05);
  CHECK(slab <= 1.0 + eps + 0.05);

  // mean of r_hat over train is exactly <xi, theta> for a single train block
  double mean = report.train_weights[0].mean();
  CHECK(mean == doctest::Approx(slab).epsilon(1e-9));
}

TEST_CASE("fit_gkmm is bit-deterministic") {
  RngStream rng(48);
  const Eigen::MatrixXd train = gaussian_matrix(30, 1, 0.0, 1.0, rng);
  const Eigen::MatrixXd test = gaussian_matrix(25, 1, 0.3, 1.0, rng);
  KernelConfig cfg;
  cfg.sigma = 0.5;
  const FitReport a = fit_gkmm(single_block(train), single_block(test), cfg);
  const FitReport b = fit_gkmm(single_block(train), single_block(test), cfg);
  CHECK(a.solution.theta == b.solution.theta);
  CHECK(a.solution.objective == b.solution.objective);
}

TEST_CASE("fitted loss does not exceed the uniform reference") {
  RngStream rng(50);
  int done = 0;
  while (done < 8) {
    const auto inst = oracles::random_instance(rng, 12, 2, 2);
    FitReport report;
    try {
      report = fit_gkmm(inst.train, inst.test, inst.kernel, inst.B, inst.eps);
    } catch (const Error&) {
      continue;
    }
    if (report.solution.status != SolveStatus::Optimal) continue;
    CHECK(report.loss_fitted <= report.loss_uniform + 1e-9);
    ++done;
  }
}

TEST_CASE("classical KMM on a single shared point returns weight 1") {
  const Eigen::MatrixXd pt = Eigen::MatrixXd::Constant(1, 1, 0.7);
  KernelConfig cfg;
  cfg.sigma = 1.0;
  // H = [[1]], h = [1]; min r^2/2 - r on [0,B] with slab (1/1)*r ~ 1 -> r = 1
  const Eigen::VectorXd r = fit_classical_kmm(pt, pt, cfg, 10.0, 0.5);
  CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("classical KMM gives identical train points identical weights") {
  RngStream rng(61);
  Eigen::MatrixXd train(2, 1);
  train << 0.4, 0.4;
  const Eigen::MatrixXd test = gaussian_matrix(10, 1, 0.0, 1.0, rng);
  KernelConfig cfg;
  cfg.sigma = 1.0;
  const Eigen::VectorXd r = fit_classical_kmm(train, test, cfg, 10.0, 0.3);
  CHECK(r[0] == doctest::Approx(r[1]).epsilon(1e-6));
}

TEST_CASE("RuLSIF degenerate single-point system solves to one half") {
  const Eigen::MatrixXd pt = Eigen::MatrixXd::Constant(1, 1, 0.2);
  KernelConfig cfg;
  cfg.sigma = 1.0;
  // K values are all 1, so H = [[1]], h = [1]; (1 + 1) w = 1
  const RulsifModel m = fit_rulsif(pt, pt, cfg, 0.5, 1.0);
  CHECK(m.w[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("RuLSIF residual is tiny on random instances") {
  RngStream rng(71);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXd train = gaussian_matrix(20, 2, 0.0, 1.0, rng);
    const Eigen::MatrixXd test = gaussian_matrix(15, 2, 0.4, 1.0, rng);
    KernelConfig cfg;
    cfg.sigma = 0.6;
    const double alpha = 0.3, lambda = 0.1;
    const RulsifModel m = fit_rulsif(train, test, cfg, alpha, lambda);

    // rebuild the system independently
    const Eigen::Index n = test.rows();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
      for (Eigen::Index k = 0; k < n; ++k) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          s += (alpha / n) *
               kernel_eval(test.row(i).transpose(), test.row(l).transpose(), cfg) *
               kernel_eval(test.row(i).transpose(), test.row(k).transpose(), cfg);
        }
        for (Eigen::Index j = 0; j < train.rows(); ++j) {
          s += ((1.0 - alpha) / train.rows()) *
               kernel_eval(train.row(j).transpose(), test.row(l).transpose(), cfg) *
               kernel_eval(train.row(j).transpose(), test.row(k).transpose(), cfg);
        }
        H(l, k) = s;
      }
    }
    Eigen::VectorXd h(n);
    for (Eigen::Index l = 0; l < n; ++l) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        s += kernel_eval(test.row(i).transpose(), test.row(l).transpose(), cfg);
      }
      h[l] = s / n;
    }
    Eigen::MatrixXd A = H;
    A.diagonal().array() += lambda;
    CHECK((A * m.w - h).norm() / h.norm() <= 1e-10);
  }
}

TEST_CASE("RuLSIF alpha = 0 reduces to the uLSIF form") {
  RngStream rng(73);
  const Eigen::MatrixXd train = gaussian_matrix(12, 1, 0.0, 1.0, rng);
  const Eigen::MatrixXd test = gaussian_matrix(9, 1, 0.5, 1.0, rng);
  KernelConfig cfg;
  cfg.sigma = 0.8;
  const double lambda = 0.05;
  const RulsifModel m = fit_rulsif(train, test, cfg, 0.0, lambda);

  const Eigen::MatrixXd K_tr = gram(train, test, cfg);
  const Eigen::MatrixXd K_tt = gram(test, test, cfg);
  Eigen::MatrixXd A = (K_tr.transpose() * K_tr) / static_cast<double>(train.rows());
  A.diagonal().array() += lambda;
  const Eigen::VectorXd h = K_tt.colwise().mean();
  const Eigen::VectorXd w_ref = A.ldlt().solve(h);
  CHECK((m.w - w_ref).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("model JSON round-trips through the gkmm-model/1 schema") {
  RngStream rng(81);
  DensityRatioModel model;
  model.basis = gaussian_matrix(5, 3, 0.0, 2.0, rng);
  model.theta = Eigen::VectorXd(5);
  for (int k = 0; k < 5; ++k) model.theta[k] = rng.uniform();
  model.kernel.family = KernelFamily::Laplacian;
  model.kernel.sigma = 1.25;

  const DensityRatioModel back = model_from_json(model_to_json(model));
  CHECK(back.theta == model.theta);
  CHECK(back.basis == model.basis);
  CHECK(back.kernel.family == model.kernel.family);
  CHECK(*back.kernel.sigma == *model.kernel.sigma);

  model.kernel.sigma.reset();
  const DensityRatioModel back2 = model_from_json(model_to_json(model));
  CHECK_FALSE(back2.kernel.sigma.has_value());

  CHECK_THROWS_AS(model_from_json("{\"schema\":\"other/9\"}"), Error);
}

TEST_CASE("alpha-relative assembly equals the hand-built mixture problem") {
  RngStream rng(91);
  const Eigen::MatrixXd train = gaussian_matrix(8, 1, 0.0, 1.0, rng);
  const Eigen::MatrixXd test = gaussian_matrix(5, 1, 0.5, 1.0, rng);
  KernelConfig cfg;
  cfg.sigma = 0.9;
  const double alpha = 0.25;

  PartitionedData train_pd = single_block(train);
  train_pd.weights[0] = 1.0 - alpha;
  const PartitionedData test_pd = single_block(test);
  const PartitionedData via_config = alpha_relative_config(train_pd, test, alpha);

  PartitionedData by_hand;
  by_hand.blocks = {train, test};
  by_hand.weights = Eigen::VectorXd(2);
  by_hand.weights << 1.0 - alpha, alpha;

  const GkmmProblem a = assemble(via_config, test_pd, cfg, 100.0, 0.5);
  const GkmmProblem b = assemble(by_hand, test_pd, cfg, 100.0, 0.5);
  CHECK((a.P - b.P).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((a.q - b.q).lpNorm<Eigen::Infinity>() <= 1e-12);
  CHECK((a.xi - b.xi).lpNorm<Eigen::Infinity>() <= 1e-12);
}
