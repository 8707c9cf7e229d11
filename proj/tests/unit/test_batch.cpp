#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "ssvb/batch.hpp"
#include "ssvb/consistency.hpp"
#include "ssvb/simgen.hpp"

using namespace ssvb;

namespace {

// The original normal equations with an explicit inverse: (Phi G Phi + n Phi (I - Phi) + Phi / v1)^{-1} Phi X^T y.
Vector eq8_oracle(const StandardizedDataset& sd, const Vector& phi, double v1) {
  const double n = static_cast<double>(sd.n());
  const Matrix Phi = phi.asDiagonal();
  const Matrix G = sd.X.transpose() * sd.X;
  const Matrix I = Matrix::Identity(phi.size(), phi.size());
  const Matrix M = Phi * G * Phi + n * Phi * (I - Phi) + Phi / v1;
  return M.inverse() * Phi * sd.X.transpose() * sd.y;
}

Vector random_phi(Index p, std::uint64_t seed) {
  Rng rng(seed);
  Vector phi(p);
  for (Index j = 0; j < p; ++j) phi(j) = 0.02 + 0.96 * rng.uniform();
  return phi;
}

StandardizedDataset orthogonal_sd(Index n, const Vector& beta, double noise, std::uint64_t seed) {
  Rng rng(seed);
  RawDataset raw;
  raw.X = orthogonal_design(n, beta.size(), rng);
  raw.y = raw.X * beta;
  for (Index i = 0; i < n; ++i) raw.y(i) += noise * rng.normal();
  return standardize(raw);
}

}  // namespace

TEST_CASE("update_mu_batch: phi = 1 is the ridge solution") {
  const auto sd = standardize(oracle::random_dataset(30, 6, 2));
  Hyperparameters hp;
  hp.v1 = 0.8;
  auto s = initial_batch_state(6, hp, 30);
  s.phi.setOnes();
  const auto t = update_mu_batch(s, sd, hp);
  const Matrix A = sd.X.transpose() * sd.X + Matrix::Identity(6, 6) / hp.v1;
  const Vector ridge = A.inverse() * sd.X.transpose() * sd.y;
  CHECK((t.mu - ridge).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("update_mu_batch: orthogonal design is diagonal") {
  const Vector beta = (Vector(5) << 1, -2, 0, 0.3, 0).finished();
  const auto sd = orthogonal_sd(50, beta, 0.4, 3);
  Hyperparameters hp;
  hp.v1 = 2;
  auto s = initial_batch_state(5, hp, 50);
  s.phi = random_phi(5, 1);  // any phi: X^T X = n I makes the system diagonal
  const auto t = update_mu_batch(s, sd, hp);
  const Vector expected = sd.X.transpose() * sd.y / (50 + 1 / hp.v1);
  CHECK((t.mu - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("update_mu_batch agrees with an explicit inverse of the normal equations") {
  Hyperparameters hp;
  hp.v1 = 1.7;
  for (const auto [n, p] : {std::pair<Index, Index>{15, 7}, {12, 30}, {40, 40}}) {
    const auto sd = standardize(oracle::random_dataset(n, p, static_cast<std::uint64_t>(n * p)));
    auto s = initial_batch_state(p, hp, static_cast<double>(n));
    s.phi = random_phi(p, 7);
    const Vector mu = update_mu_batch(s, sd, hp).mu;
    const Vector ref = eq8_oracle(sd, s.phi, hp.v1);
    CHECK((mu - ref).cwiseAbs().maxCoeff() <= 1e-8 * (1 + ref.cwiseAbs().maxCoeff()));
    // Residual of the rewritten system relative to ||X^T y||.
    const Matrix G = sd.X.transpose() * sd.X;
    Matrix A = G * s.phi.asDiagonal();
    A.diagonal().array() += static_cast<double>(n) * (1 - s.phi.array()) + 1 / hp.v1;
    const Vector Xty = sd.X.transpose() * sd.y;
    CHECK((A * mu - Xty).norm() <= 1e-10 * Xty.norm());
  }
}

TEST_CASE("least-squares limit with phi = 1 and v1 = 1e12") {
  const auto sd = standardize(oracle::random_dataset(40, 8, 5));
  Hyperparameters hp;
  hp.v1 = 1e12;
  auto s = initial_batch_state(8, hp, 40);
  s.phi.setOnes();
  const Vector mu = update_mu_batch(s, sd, hp).mu;
  const Vector ls = sd.X.completeOrthogonalDecomposition().solve(sd.y);
  CHECK((mu - ls).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("Woodbury: no change leaves mu and cache untouched") {
  const auto sd = standardize(oracle::random_dataset(20, 10, 8));
  Hyperparameters hp;
  BatchSystem sys(sd);
  WoodburyCache cache;
  auto s = initial_batch_state(10, hp, 20);
  s.phi = random_phi(10, 2);
  WoodburyStep step;
  s = update_mu_woodbury(s, cache, sys, hp, 1e-10, &step);
  CHECK(step.rebuilt);
  const Matrix before = cache.A_inv();
  const Vector mu_before = s.mu;
  s = update_mu_woodbury(s, cache, sys, hp, 1e-10, &step);
  CHECK(step.q == 0);
  CHECK(!step.rebuilt);
  CHECK(cache.A_inv() == before);
  CHECK(s.mu == mu_before);
}

TEST_CASE("Woodbury: one changed coordinate matches a full solve") {
  const auto sd = standardize(oracle::random_dataset(10, 10, 21));
  Hyperparameters hp;
  BatchSystem sys(sd);
  WoodburyCache cache;
  auto s = initial_batch_state(10, hp, 10);
  s.phi = random_phi(10, 4);
  s = update_mu_woodbury(s, cache, sys, hp, 1e-10);
  s.phi(6) = 0.123;
  WoodburyStep step;
  s = update_mu_woodbury(s, cache, sys, hp, 1e-10, &step);
  CHECK(step.q == 1);
  CHECK(!step.rebuilt);
  const Vector direct = sys.solve_mu(s.phi, hp.v1);
  CHECK((s.mu - direct).cwiseAbs().maxCoeff() < 1e-10 * (1 + direct.cwiseAbs().maxCoeff()));
  // A_inv * A = I on random vectors.
  Matrix A = sys.gram() * s.phi.asDiagonal();
  A.diagonal().array() += 10.0 * (1 - s.phi.array()) + 1 / hp.v1;
  const Vector v = oracle::random_matrix(10, 1, 3).col(0);
  CHECK((cache.A_inv() * (A * v) - v).norm() < 1e-10 * v.norm());
}

TEST_CASE("Woodbury path tracks the direct path on random instances") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Rng rng(seed);
    const Index p = 5 + static_cast<Index>(rng.uniform_index(60));
    const Index n = 10 + static_cast<Index>(rng.uniform_index(80));
    const auto sd = standardize(oracle::random_dataset(n, p, seed * 31));
    Hyperparameters hp;
    hp.v1 = 0.5 + 5 * rng.uniform();
    BatchConfig cfg;
    cfg.woodbury = true;
    cfg.audit_woodbury = true;
    const auto fr = fit_batch(sd, hp, cfg);
    REQUIRE(fr.stats.woodbury_deviation.size() == static_cast<std::size_t>(fr.iterations));
    for (const double d : fr.stats.woodbury_deviation) CHECK(d < 1e-6);
    BatchConfig direct_cfg;
    const auto ref = fit_batch(sd, hp, direct_cfg);
    CHECK(ref.iterations == fr.iterations);
    CHECK((ref.state.phi - fr.state.phi).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("update_sigma_j_batch") {
  Hyperparameters hp;
  hp.v1 = 1;
  auto s = initial_batch_state(3, hp, 100);
  s.sigma2_hat = 1;
  const auto t = update_sigma_j_batch(s, hp, 100);
  for (Index j = 0; j < 3; ++j) CHECK(t.sigma2_j(j) == doctest::Approx(1.0 / 101));
  CHECK_THROWS_AS(update_sigma_j_batch(s, hp, 0.0), Error);
}

TEST_CASE("compute_a_n") {
  SUBCASE("orthogonal design gives n") {
    const auto sd = orthogonal_sd(60, Vector::Ones(6), 1.0, 2);
    CHECK(compute_a_n(sd) == doctest::Approx(60).epsilon(1e-10));
    Hyperparameters hp;
    CHECK(resolve_a_n(sd, hp, true) == doctest::Approx(resolve_a_n(sd, hp, false)).epsilon(1e-10));
  }
  SUBCASE("duplicated column skips the zero eigenvalue") {
    auto raw = oracle::random_dataset(30, 5, 4);
    raw.X.col(4) = raw.X.col(1);
    const auto sd = standardize(raw);
    auto ev = oracle::jacobi_eigenvalues(sd.X.transpose() * sd.X);
    std::sort(ev.begin(), ev.end());
    CHECK(std::abs(ev[0]) < 1e-8);
    CHECK(compute_a_n(sd) == doctest::Approx(ev[1]).epsilon(1e-8));
  }
  SUBCASE("Example-1 design against a Jacobi eigensolver") {
    const auto sd = standardize(gen_example1(60, 1.0, 9).data);
    auto ev = oracle::jacobi_eigenvalues(sd.X.transpose() * sd.X);
    CHECK(oracle::relative_gap(compute_a_n(sd), *std::min_element(ev.begin(), ev.end())) < 1e-6);
  }
  SUBCASE("wide design uses X X^T") {
    const auto sd = standardize(oracle::random_dataset(12, 40, 6));
    auto ev = oracle::jacobi_eigenvalues(sd.X * sd.X.transpose());
    std::sort(ev.begin(), ev.end());
    // Centering removes one dimension, so the smallest eigenvalue of X X^T is 0.
    CHECK(std::abs(ev[0]) < 1e-8);
    CHECK(compute_a_n(sd) == doctest::Approx(ev[1]).epsilon(1e-8));
  }
  SUBCASE("the policy never exceeds n") {
    const auto wide = standardize(gen_example3(Ex3Variant::A, 1, Ex3Noise::Variance3, 50, 400).data);
    CHECK(compute_a_n(wide) > 50);
    CHECK(resolve_a_n(wide, Hyperparameters{}, true) == 50);
    const auto tall = standardize(gen_example1(60, 1.0, 3).data);
    CHECK(resolve_a_n(tall, Hyperparameters{}, true) == compute_a_n(tall));
    CHECK(compute_a_n(tall) < 60);
  }
  SUBCASE("zero design") {
    StandardizedDataset sd;
    sd.X = Matrix::Zero(5, 2);
    sd.y = Vector::Zero(5);
    try {
      compute_a_n(sd);
      FAIL("expected AllZeroSpectrum");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AllZeroSpectrum);
    }
  }
}

TEST_CASE("update_phi_batch: logits, truncation and freezing") {
  Hyperparameters hp;
  hp.v1 = 2;
  const double a_n = 50;
  auto s = initial_batch_state(3, hp, a_n);
  s.mu.setZero();
  s.theta_hat = 0.5;
  s.sigma2_hat = 1.3;
  s = update_sigma_j_batch(s, hp, a_n);
  s.mu(2) = 4.0;
  Vector z;
  const auto t = update_phi_batch(s, hp, &z);
  CHECK(z(0) == doctest::Approx(-0.5 * std::log(a_n * hp.v1 + 1)));
  CHECK(!t.frozen[0]);
  CHECK(t.phi(2) == 1 - hp.c);
  CHECK(t.frozen[2]);

  // A logit of -20 clamps to c and freezes.
  auto u = s;
  u.theta_hat = 1 / (1 + std::exp(20.0 - 0.5 * std::log(a_n * hp.v1 + 1)));
  const auto v = update_phi_batch(u, hp, &z);
  CHECK(z(0) == doctest::Approx(-20.0));
  CHECK(v.phi(0) == hp.c);
  CHECK(v.frozen[0]);
  // Frozen coordinates ignore new means.
  auto w = v;
  w.mu(0) = 100.0;
  w.theta_hat = 0.5;
  CHECK(update_phi_batch(w, hp).phi(0) == hp.c);
}

TEST_CASE("update_sigma2_batch") {
  auto sd = standardize(oracle::random_dataset(30, 6, 3));
  Hyperparameters hp;
  hp.v1 = 0.6;
  hp.nu = 1.5;
  hp.lambda = 2;
  auto s = oracle::random_state(6, 11);
  const double sum_phi = s.phi.sum();
  const double box = oracle::naive_sigma2_numerator(sd.X, sd.y, s, hp.v1, true) + hp.nu * hp.lambda;
  const double plain = oracle::naive_sigma2_numerator(sd.X, sd.y, s, hp.v1, false) + hp.nu * hp.lambda;
  CHECK(oracle::relative_gap(update_sigma2_batch(s, sd, hp).sigma2_hat,
                             box / (30 + sum_phi + hp.nu + 2)) < 1e-10);
  CHECK(oracle::relative_gap(update_sigma2_batch(s, sd, hp, SigmaNumerator::Plain).sigma2_hat,
                             plain / (30 + sum_phi + hp.nu + 2)) < 1e-10);
  CHECK(oracle::relative_gap(
            update_sigma2_batch(s, sd, hp, SigmaNumerator::Box, SigmaDenominator::Product).sigma2_hat,
            box / (30 + s.phi.prod() + hp.nu + 2)) < 1e-10);

  hp.c = 1e-10;
  s.phi.setConstant(hp.c);
  s.mu.setZero();
  CHECK(update_sigma2_batch(s, sd, hp).sigma2_hat ==
        doctest::Approx((sd.y.squaredNorm() + hp.nu * hp.lambda) / (30 + hp.nu + 2)).epsilon(1e-8));
}

TEST_CASE("fit_batch: noiseless orthogonal design settles after one step") {
  const Vector beta = (Vector(6) << 1.5, -1, 2, 0, 0, 0).finished();
  const auto sd = orthogonal_sd(100, beta, 0.0, 5);
  Hyperparameters hp;
  hp.v1 = 1e5;
  hp.an_policy = FixedN{};
  BatchConfig one;
  one.max_iters = 1;
  const auto first = fit_batch(sd, hp, one);
  for (Index j = 0; j < 6; ++j) {
    CHECK(first.state.frozen[static_cast<std::size_t>(j)]);
    CHECK(first.state.phi(j) == (j < 3 ? 1 - hp.c : hp.c));
  }
  const auto full = fit_batch(sd, hp);
  CHECK(full.converged);
  CHECK(full.iterations <= 2);
  CHECK(full.selected == std::vector<Index>{0, 1, 2});
}

TEST_CASE("fit_batch: frozen coordinates never change") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto sd = standardize(gen_example2(100, seed).data);
    Hyperparameters hp;
    hp.v1 = 3;
    BatchConfig cfg;
    std::vector<double> frozen_at(40, -1.0);
    bool ok = true;
    cfg.on_iteration = [&](const VariationalState& s) {
      for (std::size_t j = 0; j < 40; ++j) {
        if (frozen_at[j] >= 0 && s.phi(static_cast<Index>(j)) != frozen_at[j]) ok = false;
        if (s.frozen[j] && frozen_at[j] < 0) frozen_at[j] = s.phi(static_cast<Index>(j));
        if (s.frozen[j] && !(s.phi(static_cast<Index>(j)) <= hp.c || s.phi(static_cast<Index>(j)) >= 1 - hp.c)) ok = false;
      }
    };
    fit_batch(sd, hp, cfg);
    CHECK(ok);
  }
}

TEST_CASE("fit_batch: box and prose orders give the same iterates") {
  const auto sd = standardize(gen_example1(60, 1, 4).data);
  const Hyperparameters hp;
  BatchConfig box, prose;
  prose.order = UpdateOrder::Prose;
  const auto a = fit_batch(sd, hp, box);
  const auto b = fit_batch(sd, hp, prose);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(a.iterations == b.iterations);
  CHECK((a.state.mu - b.state.mu).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("one-step gap on orthogonal designs") {
  int positive = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    OrthogonalProbe probe;
    probe.n = 200;
    probe.p = 10;
    probe.v1 = 1;
    probe.beta_star = Vector::Zero(10);
    probe.beta_star.head(3) << 1, -1, 1.5;
    const auto draw = draw_probe(probe, seed);
    const Vector z = solver_one_step_logits(draw, 1.0, 1.0);
    positive += z.head(3).minCoeff() > z.tail(7).maxCoeff() ? 1 : 0;
  }
  CHECK(positive >= 95);
}

TEST_CASE("batch config validation") {
  BatchConfig cfg;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.fixed_theta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.woodbury_rebuild_every = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
