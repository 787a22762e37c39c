#include "cbfmsc/data.hpp"
#include "cbfmsc/proxops.hpp"
#include "cbfmsc/solver.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace cbfmsc;

namespace {

MultiViewData<double> random_views(std::mt19937_64& rng, Index n, std::vector<Index> dims) {
  MultiViewData<double> d;
  for (auto dim : dims) d.views.push_back(oracle::gaussian(dim, n, rng));
  return d;
}

SolverConfig<double> config_with_k(Index k, std::uint64_t seed = 0) {
  SolverConfig<double> c;
  c.k = k;
  c.seed = seed;
  return c;
}

// Fills every state variable with noise and sets a moderate mu.
void randomize(SolverState<double>& s, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < s.Z.size(); ++i) {
    s.Z[i] = oracle::gaussian(s.Z[i].rows(), s.Z[i].cols(), rng);
    s.E[i] = oracle::gaussian(s.E[i].rows(), s.E[i].cols(), rng);
    s.U[i] = oracle::random_orthonormal(s.U[i].rows(), s.U[i].cols(), rng);
    s.Y1[i] = oracle::gaussian(s.Y1[i].rows(), s.Y1[i].cols(), rng);
    s.Y2[i] = oracle::gaussian(s.Y2[i].rows(), s.Y2[i].cols(), rng);
  }
  s.V = oracle::gaussian(s.V.rows(), s.V.cols(), rng);
  s.L = oracle::gaussian(s.L.rows(), s.L.cols(), rng);
  s.Y3 = oracle::gaussian(s.Y3.rows(), s.Y3.cols(), rng);
  s.mu = 0.7;
}

// X of rank r, Z the projector onto its row space = U V, E = 0, L = V and
// zero multipliers: every constraint holds exactly (up to rounding).
struct Consistent {
  MultiViewData<double> data;
  SolverState<double> state;
};

Consistent consistent_state(std::mt19937_64& rng, Index n, Index r, int views) {
  Consistent c;
  const Matrix basis = oracle::random_orthonormal(n, r, rng);  // row space
  for (int i = 0; i < views; ++i) {
    c.data.views.push_back(oracle::gaussian(5 + i, r, rng) * basis.transpose());
  }
  c.state = init_state(c.data, config_with_k(r));
  for (int i = 0; i < views; ++i) {
    c.state.Z[i] = basis * basis.transpose();
    c.state.U[i] = basis;
  }
  c.state.V = basis.transpose();
  c.state.L = c.state.V;
  return c;
}

MultiViewDataset small_synth(double sigma, std::uint64_t seed) {
  SynthParams p;
  p.clusters = 3;
  p.subspace_dim = 2;
  p.view_dims = {15, 20};
  p.per_cluster = 10;
  p.sigma = sigma;
  p.seed = seed;
  return normalize_dataset(synth_multiview(p), Normalization::UnitColumn);
}

}  // namespace

TEST_CASE("config validation") {
  SolverConfig<double> c = config_with_k(5);
  CHECK_NOTHROW(c.validate(10));
  CHECK_THROWS_AS(c.validate(5), InvalidArgument);
  auto bad = c;
  bad.lambda = 0;
  CHECK_THROWS_AS(bad.validate(10), InvalidArgument);
  bad = c;
  bad.rho = 0.9;
  CHECK_THROWS_AS(bad.validate(10), InvalidArgument);
  bad = c;
  bad.mu0 = 2e6;
  CHECK_THROWS_AS(bad.validate(10), InvalidArgument);
  bad = c;
  bad.eps = 0;
  CHECK_THROWS_AS(bad.validate(10), InvalidArgument);
  bad = c;
  bad.max_iter = 0;
  CHECK_THROWS_AS(bad.validate(10), InvalidArgument);
  bad = c;
  bad.k = 0;
  CHECK_THROWS_AS(bad.validate(10), InvalidArgument);
}

TEST_CASE("init_state") {
  std::mt19937_64 rng(1);
  const auto data = random_views(rng, 12, {4, 6, 8});
  const auto config = config_with_k(3, 42);
  const auto a = init_state(data, config);
  const auto b = init_state(data, config);

  SUBCASE("deterministic") {
    for (int i = 0; i < 3; ++i) CHECK(a.Z[i] == b.Z[i]);
  }
  SUBCASE("shapes for three views") {
    CHECK(a.Z.size() == 3);
    CHECK(a.E.size() == 3);
    CHECK(a.U.size() == 3);
    CHECK(a.Y1.size() == 3);
    CHECK(a.Y2.size() == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(a.Z[i].rows() == 12);
      CHECK(a.Z[i].cols() == 12);
      CHECK(a.E[i].rows() == data.views[i].rows());
      CHECK(a.E[i].cols() == 12);
      CHECK(a.U[i].rows() == 12);
      CHECK(a.U[i].cols() == 3);
      CHECK(a.Y1[i].rows() == data.views[i].rows());
      CHECK(a.Y2[i].rows() == 12);
      CHECK(a.E[i].isZero(0.0));
      CHECK(a.U[i].isZero(0.0));
      CHECK(a.Y1[i].isZero(0.0));
      CHECK(a.Y2[i].isZero(0.0));
    }
    CHECK(a.V.rows() == 3);
    CHECK(a.V.cols() == 12);
    CHECK(a.V.isZero(0.0));
    CHECK(a.L.isZero(0.0));
    CHECK(a.Y3.isZero(0.0));
  }
  SUBCASE("default mu") { CHECK(a.mu == 1e-4); }
  SUBCASE("Z drawn at the documented scale") {
    const auto big = init_state(random_views(rng, 100, {3}), config_with_k(3, 7));
    const double mean = big.Z[0].mean();
    const double sd = std::sqrt((big.Z[0].array() - mean).square().mean());
    CHECK(std::abs(mean) < 5e-4);
    CHECK(sd == doctest::Approx(0.01).epsilon(0.02));
  }
  SUBCASE("different seeds differ") {
    const auto c = init_state(data, config_with_k(3, 43));
    CHECK(c.Z[0] != a.Z[0]);
  }
  CHECK_THROWS_AS(init_state(data, config_with_k(12)), InvalidArgument);
}

TEST_CASE("update_V") {
  std::mt19937_64 rng(2);
  SUBCASE("U = 0 and Y3 = 0 gives V = L") {
    const auto data = random_views(rng, 10, {4, 5});
    auto s = init_state(data, config_with_k(3));
    s.L = oracle::gaussian(3, 10, rng);
    s.mu = 0.3;
    update_V(s, data);
    CHECK((s.V - s.L).norm() < 1e-12);
  }
  SUBCASE("exact single-view factorization is recovered") {
    const auto data = random_views(rng, 10, {4});
    auto s = init_state(data, config_with_k(3));
    const Matrix u = oracle::random_orthonormal(10, 3, rng);
    const Matrix v0 = oracle::gaussian(3, 10, rng);
    s.U[0] = u;
    s.Z[0] = u * v0;
    s.L = v0;
    s.mu = 2.5;
    update_V(s, data);
    CHECK((s.V - v0).norm() < 1e-10);
  }
  SUBCASE("random state solves the normal equations") {
    const auto data = random_views(rng, 15, {4, 6, 3});
    auto s = init_state(data, config_with_k(4));
    randomize(s, rng);
    update_V(s, data);
    Matrix a = Matrix::Identity(4, 4);
    Matrix b = s.mu * s.L - s.Y3;
    for (int i = 0; i < 3; ++i) {
      a += s.U[i].transpose() * s.U[i];
      b += s.U[i].transpose() * s.Y2[i] + s.mu * s.U[i].transpose() * s.Z[i];
    }
    a *= s.mu;
    CHECK((a * s.V - b).norm() <= 1e-8 * b.norm());
    CHECK((s.V - a.fullPivLu().solve(b)).norm() <= 1e-10 * s.V.norm());
    // orthonormal U collapses the system to mu (1 + v) I
    CHECK((s.V - b / (s.mu * 4.0)).norm() <= 1e-10 * s.V.norm());
  }
  SUBCASE("non-finite state") {
    const auto data = random_views(rng, 6, {3});
    auto s = init_state(data, config_with_k(2));
    s.L(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(update_V(s, data), NumericFailure);
  }
}

TEST_CASE("update_L") {
  std::mt19937_64 rng(3);
  const auto data = random_views(rng, 8, {3});
  auto s = init_state(data, config_with_k(3));
  SUBCASE("zero threshold copies V + Y3/mu") {
    s.V = oracle::gaussian(3, 8, rng);
    s.Y3 = oracle::gaussian(3, 8, rng);
    s.mu = 4.0;
    s.lambda = 0.0;
    update_L(s);
    CHECK((s.L - (s.V + s.Y3 / s.mu)).norm() < 1e-10);
  }
  SUBCASE("embedded diag(3,1) with threshold 2") {
    s.V.setZero();
    s.V(0, 0) = 3;
    s.V(1, 1) = 1;
    s.mu = 0.5;
    s.lambda = 1.0;
    update_L(s);
    Matrix expected = Matrix::Zero(3, 8);
    expected(0, 0) = 1;
    CHECK((s.L - expected).norm() < 1e-12);
  }
  SUBCASE("zero input") {
    s.mu = 1.0;
    s.lambda = 1.0;
    s.L = Matrix::Ones(3, 8);
    update_L(s);
    CHECK(s.L.isZero(0.0));
  }
}

TEST_CASE("update_E") {
  std::mt19937_64 rng(4);
  SUBCASE("exact self-representation gives zero error") {
    auto c = consistent_state(rng, 10, 3, 2);
    c.state.E[0] = Matrix::Ones(c.state.E[0].rows(), 10);
    c.state.mu = 1.0;
    update_E(c.state, c.data, 0);
    CHECK(c.state.E[0].norm() < 1e-12);
  }
  SUBCASE("small residual column is zeroed") {
    MultiViewData<double> data({Matrix(Matrix::Zero(2, 3))});
    auto s = init_state(data, config_with_k(1));
    s.mu = 2.0;
    s.Y1[0](0, 1) = 0.6;  // T_E column norm 0.3 < 1/mu
    update_E(s, data, 0);
    CHECK(s.E[0].isZero(0.0));
  }
  SUBCASE("random state agrees with the numeric minimizer") {
    const auto data = random_views(rng, 6, {5});
    auto s = init_state(data, config_with_k(2));
    randomize(s, rng);
    s.mu = 0.8;
    update_E(s, data, 0);
    const Matrix t = data.views[0] - data.views[0] * s.Z[0] + s.Y1[0] / s.mu;
    const double closed = oracle::l21_objective(s.E[0], t, 1 / s.mu);
    const double numeric =
        oracle::l21_objective(oracle::numeric_l21_minimizer(t, 1 / s.mu), t, 1 / s.mu);
    CHECK(std::abs(closed - numeric) <= 1e-8 * numeric);
  }
  SUBCASE("bad view index") {
    const auto data = random_views(rng, 6, {5});
    auto s = init_state(data, config_with_k(2));
    CHECK_THROWS_AS(update_E(s, data, 1), InvalidArgument);
  }
}

TEST_CASE("update_U") {
  std::mt19937_64 rng(5);
  const auto data = random_views(rng, 12, {4});
  auto s = init_state(data, config_with_k(3));
  const Matrix u0 = oracle::random_orthonormal(12, 3, rng);
  s.V = oracle::gaussian(3, 12, rng);
  s.Y2[0].setZero();
  s.mu = 1.0;

  SUBCASE("exact factorization recovered") {
    s.Z[0] = u0 * s.V;
    update_U(s, 0);
    CHECK((s.U[0] - u0).norm() < 1e-8);
  }
  SUBCASE("scaling Z leaves U unchanged") {
    s.Z[0] = oracle::gaussian(12, 12, rng);
    update_U(s, 0);
    const Matrix first = s.U[0];
    s.Z[0] *= 5.0;
    update_U(s, 0);
    CHECK((s.U[0] - first).norm() < 1e-10);
  }
  SUBCASE("random state beats random candidates") {
    randomize(s, rng);
    update_U(s, 0);
    const Matrix target = s.Z[0] + s.Y2[0] / s.mu;
    const double best = oracle::procrustes_objective(s.U[0], target, s.V);
    for (int c = 0; c < 10000; ++c) {
      const Matrix cand = oracle::random_orthonormal(12, 3, rng);
      REQUIRE(best <= oracle::procrustes_objective(cand, target, s.V) + 1e-9);
    }
    CHECK((s.U[0].transpose() * s.U[0] - Matrix::Identity(3, 3)).norm() <= 1e-8);
  }
  SUBCASE("zero V is reseeded") {
    s.Z[0] = oracle::gaussian(12, 12, rng);
    s.V.setZero();
    update_U(s, 0);
    CHECK_FALSE(s.V.isZero(0.0));
    CHECK(s.V.cwiseAbs().maxCoeff() < 1e-4);
    CHECK((s.U[0].transpose() * s.U[0] - Matrix::Identity(3, 3)).norm() <= 1e-8);
  }
  SUBCASE("zero argument after reseed fails") {
    s.Z[0].setZero();
    s.V.setZero();
    CHECK_THROWS_AS(update_U(s, 0), DegenerateInput);
  }
}

TEST_CASE("update_Z") {
  std::mt19937_64 rng(6);
  SUBCASE("X = 0 gives UV - Y2/mu") {
    MultiViewData<double> data({Matrix(Matrix::Zero(3, 9))});
    auto s = init_state(data, config_with_k(2));
    randomize(s, rng);
    s.E[0].setZero();
    update_Z(s, data, 0);
    CHECK((s.Z[0] - (s.U[0] * s.V - s.Y2[0] / s.mu)).norm() < 1e-12);
  }
  SUBCASE("consistent state is a fixed point") {
    auto c = consistent_state(rng, 10, 3, 2);
    c.state.mu = 0.9;
    const Matrix before = c.state.Z[1];
    update_Z(c.state, c.data, 1);
    CHECK((c.state.Z[1] - before).norm() < 1e-10);
  }
  SUBCASE("random state solves the normal equations") {
    const auto data = random_views(rng, 14, {6, 9});
    auto s = init_state(data, config_with_k(3));
    randomize(s, rng);
    const auto gram = factorize_gram(data);
    update_Z(s, data, 1, gram[1]);
    const Matrix& x = data.views[1];
    const Matrix a = s.mu * (Matrix::Identity(14, 14) + x.transpose() * x);
    const Matrix b = s.mu * s.U[1] * s.V - s.Y2[1] + x.transpose() * (s.Y1[1] + s.mu * x - s.mu * s.E[1]);
    CHECK((a * s.Z[1] - b).norm() <= 1e-8 * b.norm());
    const Matrix cached = s.Z[1];
    update_Z(s, data, 1);
    CHECK((s.Z[1] - cached).norm() <= 1e-12 * cached.norm());
  }
}

TEST_CASE("update_multipliers") {
  std::mt19937_64 rng(7);
  SUBCASE("consistent state: multipliers unchanged, mu grows") {
    auto c = consistent_state(rng, 10, 3, 2);
    c.state.Y1[0] = Matrix::Constant(c.state.Y1[0].rows(), 10, 0.25);
    c.state.Y3 = Matrix::Constant(3, 10, -0.5);
    const auto before = c.state;
    c.state.mu = 0.01;
    update_multipliers(c.state, c.data);
    CHECK((c.state.Y1[0] - before.Y1[0]).norm() < 1e-12);
    CHECK((c.state.Y2[1] - before.Y2[1]).norm() < 1e-12);
    CHECK((c.state.Y3 - before.Y3).norm() < 1e-12);
    CHECK(c.state.mu == doctest::Approx(0.019));
  }
  SUBCASE("mu at the cap stays there") {
    auto c = consistent_state(rng, 8, 2, 1);
    c.state.mu = c.state.mu_max;
    update_multipliers(c.state, c.data);
    CHECK(c.state.mu == 1e6);
  }
  SUBCASE("rho = 1 keeps mu constant") {
    const auto data = random_views(rng, 8, {3});
    auto config = config_with_k(2);
    config.rho = 1.0;
    auto s = init_state(data, config);
    for (int i = 0; i < 5; ++i) update_multipliers(s, data);
    CHECK(s.mu == 1e-4);
  }
  SUBCASE("ascent step on a random state") {
    const auto data = random_views(rng, 7, {4});
    auto s = init_state(data, config_with_k(2));
    randomize(s, rng);
    const auto before = s;
    update_multipliers(s, data);
    const Matrix& x = data.views[0];
    CHECK((s.Y1[0] - (before.Y1[0] + before.mu * (x - x * before.Z[0] - before.E[0]))).norm() < 1e-12);
    CHECK((s.Y2[0] - (before.Y2[0] + before.mu * (before.Z[0] - before.U[0] * before.V))).norm() <
          1e-12);
    CHECK((s.Y3 - (before.Y3 + before.mu * (before.V - before.L))).norm() < 1e-12);
  }
}

TEST_CASE("residuals") {
  std::mt19937_64 rng(8);
  SUBCASE("consistent state") {
    const auto c = consistent_state(rng, 10, 3, 2);
    const auto r = residuals(c.state, c.data);
    CHECK(r.x_conv < 1e-12);
    CHECK(r.z_conv < 1e-12);
    CHECK(r.v_conv == 0.0);
  }
  SUBCASE("one perturbed entry of L") {
    auto c = consistent_state(rng, 10, 3, 2);
    c.state.L(2, 7) += 0.125;
    CHECK(residuals(c.state, c.data).v_conv == doctest::Approx(0.125));
  }
  SUBCASE("brute force") {
    const auto data = random_views(rng, 9, {4, 6});
    auto s = init_state(data, config_with_k(3));
    randomize(s, rng);
    const auto r = residuals(s, data);
    double xs = 0, zs = 0, xw = 0, zw = 0, vr = 0;
    for (int i = 0; i < 2; ++i) {
      const Matrix& x = data.views[i];
      double xm = 0, zm = 0;
      for (Index a = 0; a < x.rows(); ++a) {
        for (Index b = 0; b < 9; ++b) {
          double xz = 0;
          for (Index t = 0; t < 9; ++t) xz += x(a, t) * s.Z[i](t, b);
          xm = std::max(xm, std::abs(x(a, b) - xz - s.E[i](a, b)));
        }
      }
      for (Index a = 0; a < 9; ++a) {
        for (Index b = 0; b < 9; ++b) {
          double uv = 0;
          for (Index t = 0; t < 3; ++t) uv += s.U[i](a, t) * s.V(t, b);
          zm = std::max(zm, std::abs(s.Z[i](a, b) - uv));
        }
      }
      xs += xm / 2;
      zs += zm / 2;
      xw = std::max(xw, xm);
      zw = std::max(zw, zm);
    }
    for (Index a = 0; a < 3; ++a) {
      for (Index b = 0; b < 9; ++b) vr = std::max(vr, std::abs(s.V(a, b) - s.L(a, b)));
    }
    CHECK(r.x_conv == doctest::Approx(xs).epsilon(1e-12));
    CHECK(r.z_conv == doctest::Approx(zs).epsilon(1e-12));
    CHECK(r.x_worst == doctest::Approx(xw).epsilon(1e-12));
    CHECK(r.z_worst == doctest::Approx(zw).epsilon(1e-12));
    CHECK(r.v_conv == vr);
  }
  SUBCASE("below needs every component") {
    Residuals<double> r;
    CHECK(r.below(1e-6));
    r.z_worst = 2e-6;
    CHECK_FALSE(r.below(1e-6));
  }
}

TEST_CASE("consensus_Z") {
  std::mt19937_64 rng(9);
  const auto data = random_views(rng, 8, {3, 3});
  auto s = init_state(data, config_with_k(2));
  s.V = oracle::gaussian(2, 8, rng);
  const Matrix u = oracle::random_orthonormal(8, 2, rng);
  SUBCASE("equal bases") {
    s.U[0] = u;
    s.U[1] = u;
    CHECK((consensus_Z(s) - u * s.V).norm() < 1e-12);
  }
  SUBCASE("opposite bases cancel") {
    s.U[0] = u;
    s.U[1] = -u;
    CHECK(consensus_Z(s).norm() < 1e-14);
  }
  SUBCASE("single view") {
    MultiViewData<double> one({data.views[0]});
    auto t = init_state(one, config_with_k(2));
    t.U[0] = u;
    t.V = s.V;
    CHECK((consensus_Z(t) - u * s.V).norm() < 1e-14);
  }
}

TEST_CASE("solve on small synthetic data") {
  const auto ds = small_synth(0.01, 3);
  auto config = config_with_k(6, 5);
  config.lambda = 100;

  std::vector<double> mus;
  double worst_orth = 0.0;
  double worst_invariance = 0.0;
  const auto result = solve(ds.data, config, [&](int, const SolverState<double>& s) {
    mus.push_back(s.mu);
    const double tv = trace_norm(s.V);
    for (const auto& u : s.U) {
      worst_orth = std::max(worst_orth, (u.transpose() * u - Matrix::Identity(6, 6)).norm());
      worst_invariance = std::max(worst_invariance, std::abs(trace_norm(u * s.V) - tv) / std::max(1.0, tv));
    }
  });

  CHECK(result.converged);
  CHECK(result.iterations <= 300);
  CHECK(result.residual_history.size() == static_cast<std::size_t>(result.iterations));
  CHECK(result.residual_history.back().below(config.eps));
  CHECK(worst_orth <= 1e-8);
  CHECK(worst_invariance <= 1e-6);
  for (std::size_t i = 1; i < mus.size(); ++i) CHECK(mus[i] >= mus[i - 1]);
  CHECK(mus.back() <= config.mu_max);
  CHECK(result.Z.rows() == ds.samples());
  CHECK(result.Z_views.size() == 2);

  SUBCASE("deterministic") {
    const auto again = solve(ds.data, config);
    REQUIRE(again.iterations == result.iterations);
    for (int i = 0; i < result.iterations; ++i) {
      CHECK(again.residual_history[i].x_conv == result.residual_history[i].x_conv);
      CHECK(again.residual_history[i].z_conv == result.residual_history[i].z_conv);
      CHECK(again.residual_history[i].v_conv == result.residual_history[i].v_conv);
    }
    CHECK(again.Z == result.Z);
  }

  SUBCASE("matches the reference transcription") {
    const auto ref = oracle::reference_solve(ds.data, config.lambda, config.k, config.rho,
                                             config.mu0, config.mu_max, config.eps,
                                             config.max_iter, config.seed);
    CHECK(ref.iterations == result.iterations);
    const std::size_t common = std::min(ref.residuals.size(), result.residual_history.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < common; ++i) {
      const auto& a = result.residual_history[i];
      const auto& b = ref.residuals[i];
      worst = std::max({worst, std::abs(a.x_conv - b[0]) / std::max(b[0], 1e-9),
                        std::abs(a.z_conv - b[1]) / std::max(b[1], 1e-9),
                        std::abs(a.v_conv - b[2]) / std::max(b[2], 1e-9)});
    }
    CHECK(worst < 1e-4);
    CHECK((ref.consensus - result.Z).norm() <= 1e-6 * result.Z.norm());
  }

  SUBCASE("single view converges") {
    MultiViewData<double> one({ds.data.views[0]});
    const auto r = solve(one, config);
    CHECK(r.converged);
  }

  SUBCASE("iteration cap is reported, not thrown") {
    auto capped = config;
    capped.max_iter = 3;
    const auto r = solve(ds.data, capped);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    CHECK(r.residual_history.size() == 3);
  }
}

TEST_CASE("solve rejects bad input") {
  std::mt19937_64 rng(10);
  MultiViewData<double> mismatched({oracle::gaussian(3, 10, rng), oracle::gaussian(3, 9, rng)});
  CHECK_THROWS_AS(solve(mismatched, config_with_k(2)), InvalidArgument);
  MultiViewData<double> none;
  CHECK_THROWS_AS(solve(none, config_with_k(2)), InvalidArgument);
  MultiViewData<double> nan({Matrix(Matrix::Constant(2, 5, std::nan("")))});
  CHECK_THROWS_AS(solve(nan, config_with_k(2)), InvalidArgument);
}
