#include "ssvb/batch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "ssvb/elbo.hpp"

namespace ssvb {

void BatchConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(entropy_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "entropy_tol must be > 0");
  if (!(linear_solver_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "linear_solver_tol must be > 0");
  }
  if (woodbury_rebuild_every < 1) {
    throw Error(ErrorCode::InvalidArgument, "woodbury_rebuild_every must be >= 1");
  }
  if (fixed_theta && !(*fixed_theta > 0.0 && *fixed_theta < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "fixed_theta must lie in (0, 1)");
  }
  if (fixed_sigma2 && !(*fixed_sigma2 > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "fixed_sigma2 must be positive");
  }
}

double compute_a_n(const StandardizedDataset& data) {
  const Index n = data.n();
  const Index p = data.p();
  const Matrix K = p <= n ? Matrix(data.X.transpose() * data.X) : Matrix(data.X * data.X.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "eigensolver failed");
  const Vector& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0)) throw Error(ErrorCode::AllZeroSpectrum, "X^T X has no positive eigenvalue");
  const double cutoff =
      static_cast<double>(std::max(n, p)) * std::numeric_limits<double>::epsilon() * top;
  double best = top;
  for (Index k = 0; k < ev.size(); ++k) {
    if (ev(k) > cutoff) best = std::min(best, ev(k));
  }
  return best;
}

double resolve_a_n(const StandardizedDataset& data, const Hyperparameters& hp,
                   bool use_an_correction) {
  const double n = static_cast<double>(data.n());
  if (!use_an_correction) return n;
  struct Visitor {
    const StandardizedDataset& d;
    double n;
    double operator()(FixedN) const { return n; }
    // The correction exists to widen sigma_j^2 when the spectrum is small.
    // With p > n the smallest non-zero eigenvalue is typically above n and
    // would narrow it instead, so it is capped at n.
    double operator()(MinNonzeroEigen) const { return std::min(compute_a_n(d), n); }
    double operator()(ExplicitAn e) const { return e.value; }
  };
  return std::visit(Visitor{data, n}, hp.an_policy);
}

BatchSystem::BatchSystem(const StandardizedDataset& data)
    : data_(&data), Xty_(data.X.transpose() * data.y) {
  primal_ = data.p() <= data.n();
  if (primal_) gram();
}

const Matrix& BatchSystem::gram() {
  if (!have_gram_) {
    gram_ = Matrix(data_->p(), data_->p());
    gram_.setZero();
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(data_->X.transpose());
    gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
    have_gram_ = true;
  }
  return gram_;
}

Vector BatchSystem::solve_mu(const Vector& phi, double v1) const {
  const StandardizedDataset& d = *data_;
  const double n = static_cast<double>(d.n());
  const Vector diag = (n * (1.0 - phi.array()) + 1.0 / v1).matrix();

  if (primal_) {
    // z = Phi^{1/2} mu solves (Phi^{1/2} G Phi^{1/2} + D) z = Phi^{1/2} X^T y,
    // which is symmetric positive definite.
    const Vector sp = phi.cwiseSqrt();
    Matrix M = sp.asDiagonal() * gram_ * sp.asDiagonal();
    M.diagonal() += diag;
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularSystem, "batch mu system is not positive definite");
    }
    return llt.solve(sp.cwiseProduct(Xty_)).cwiseQuotient(sp);
  }

  // p > n: mu = D^{-1} X^T w with (I + X diag(phi / d) X^T) w = y.
  const Vector scale = phi.cwiseQuotient(diag);
  Matrix K = d.X * scale.asDiagonal() * d.X.transpose();
  K.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "dual mu system is not positive definite");
  }
  const Vector w = llt.solve(d.y);
  return (d.X.transpose() * w).cwiseQuotient(diag);
}

void WoodburyCache::rebuild(const Matrix& gram, const Matrix& X, const Vector& phi, double n,
                            double v1) {
  const Index p = phi.size();
  kappa_ = n + 1.0 / v1;
  n_ = n;
  if (X.rows() < p) {
    // A = D + X^T X Phi with D = diag(kappa - n phi), so
    // A^{-1} = D^{-1} - D^{-1} X^T (I + X Phi D^{-1} X^T)^{-1} X Phi D^{-1}.
    const Vector d_inv = (kappa_ - n * phi.array()).inverse().matrix();
    const Matrix XS = X * phi.cwiseProduct(d_inv).asDiagonal();  // X Phi D^{-1}
    Matrix K = XS * X.transpose();
    K.diagonal().array() += 1.0;
    const Matrix right = Eigen::PartialPivLU<Matrix>(K).solve(XS);
    A_inv_.noalias() = -(d_inv.asDiagonal() * X.transpose()) * right;
    A_inv_.diagonal() += d_inv;
  } else {
    Matrix A = gram * phi.asDiagonal();
    A.diagonal().array() += kappa_ - n * phi.array();
    A_inv_ = Eigen::PartialPivLU<Matrix>(A).inverse();
  }
  last_phi_ = phi;
  valid_ = A_inv_.allFinite() && A_inv_.rows() == p;
}

Index WoodburyCache::count_changed(const Vector& phi) const {
  return (phi.array() != last_phi_.array()).count();
}

bool WoodburyCache::update(const Matrix& gram, const Vector& phi, double n, double tol,
                           int* q_out) {
  std::vector<Index> changed;
  for (Index j = 0; j < phi.size(); ++j) {
    if (phi(j) != last_phi_(j)) changed.push_back(j);
  }
  const auto q = static_cast<Index>(changed.size());
  if (q_out) *q_out = static_cast<int>(q);
  if (q == 0) return true;

  const Index p = phi.size();
  // A_new = A + U C V with U = B[:, ch], C = diag(dphi), V = rows ch of I.
  // Written as A^{-1} - (A^{-1} U) C (I + V A^{-1} U C)^{-1} V A^{-1}, which is
  // the Woodbury identity without forming C^{-1} (dphi can be tiny).
  Matrix Bc(p, q);
  Vector dphi(q);
  for (Index k = 0; k < q; ++k) {
    Bc.col(k) = gram.col(changed[k]);
    Bc(changed[k], k) -= n;
    dphi(k) = phi(changed[k]) - last_phi_(changed[k]);
  }
  const Matrix P = A_inv_ * Bc;  // A^{-1} U
  Matrix inner(q, q);
  for (Index k = 0; k < q; ++k) inner.row(k) = P.row(changed[k]);
  inner = inner * dphi.asDiagonal();
  inner.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Matrix> lu(inner);
  if (!(lu.rcond() >= tol)) return false;

  Matrix rows(q, p);  // V A^{-1}
  for (Index k = 0; k < q; ++k) rows.row(k) = A_inv_.row(changed[k]);
  const Matrix right = lu.solve(rows);
  A_inv_.noalias() -= (P * dphi.asDiagonal()) * right;
  last_phi_ = phi;
  return A_inv_.allFinite();
}

VariationalState update_mu_batch(VariationalState s, const StandardizedDataset& data,
                                 const Hyperparameters& hp) {
  BatchSystem system(data);
  s.mu = system.solve_mu(s.phi, hp.v1);
  return s;
}

VariationalState update_mu_woodbury(VariationalState s, WoodburyCache& cache, BatchSystem& system,
                                    const Hyperparameters& hp, double tol, WoodburyStep* step) {
  const double n = static_cast<double>(system.data().n());
  const Matrix& G = system.gram();
  WoodburyStep info;
  // Past about p/3 changed coordinates the rank-q update costs more than a
  // fresh inverse.
  if (!cache.valid() || 3 * cache.count_changed(s.phi) > s.phi.size()) {
    if (cache.valid()) info.q = static_cast<int>(cache.count_changed(s.phi));
    cache.rebuild(G, system.data().X, s.phi, n, hp.v1);
    info.rebuilt = true;
  } else if (!cache.update(G, s.phi, n, tol, &info.q)) {
    cache.rebuild(G, system.data().X, s.phi, n, hp.v1);
    info.rebuilt = true;
    info.fell_back = true;
  }
  if (!cache.valid()) throw Error(ErrorCode::SingularSystem, "Woodbury rebuild failed");
  s.mu = cache.A_inv() * system.Xty();
  if (step) *step = info;
  return s;
}

VariationalState update_sigma_j_batch(VariationalState s, const Hyperparameters& hp, double a_n) {
  if (!(a_n > 0.0)) throw Error(ErrorCode::InvalidArgument, "a_n must be positive");
  s.sigma2_j.setConstant(s.mu.size(), s.sigma2_hat / (a_n + 1.0 / hp.v1));
  return s;
}

VariationalState update_phi_batch(VariationalState s, const Hyperparameters& hp,
                                  Vector* logits_out) {
  const Index p = s.mu.size();
  if (logits_out) logits_out->resize(p);
  for (Index j = 0; j < p; ++j) {
    const double z = phi_logit(s.mu(j), s.sigma2_j(j), s.theta_hat, s.sigma2_hat, hp.v1);
    if (logits_out) (*logits_out)(j) = z;
    auto& frozen = s.frozen[static_cast<std::size_t>(j)];
    if (frozen) continue;
    const double raw = sigmoid(z);
    if (raw <= hp.c) {
      s.phi(j) = hp.c;
      frozen = 1;
    } else if (raw >= 1.0 - hp.c) {
      s.phi(j) = 1.0 - hp.c;
      frozen = 1;
    } else {
      s.phi(j) = raw;
    }
  }
  return s;
}

VariationalState update_sigma2_batch(VariationalState s, const StandardizedDataset& data,
                                     const Hyperparameters& hp, SigmaNumerator numerator,
                                     SigmaDenominator denominator) {
  const double n = static_cast<double>(data.n());
  const double rss = (data.y - data.X * s.phi.cwiseProduct(s.mu)).squaredNorm();
  double num = sigma2_core_numerator(s.mu, s.sigma2_j, s.phi, rss, n, hp.v1) + hp.nu * hp.lambda;
  if (numerator == SigmaNumerator::Box) {
    num += (s.phi.array() * (s.mu.array().square() + s.sigma2_j.array())).sum() / hp.v1;
  }
  s.sigma2_hat = num / sigma2_denominator(s.phi, n, hp, denominator);
  return s;
}

VariationalState initial_batch_state(Index p, const Hyperparameters& hp, double a_n) {
  VariationalState s;
  s.mu = Vector::Zero(p);
  s.phi = Vector::Constant(p, 1.0 - hp.c);
  s.theta_hat = 0.5;
  s.sigma2_hat = 1.0;
  s.sigma2_j = Vector::Constant(p, s.sigma2_hat / (a_n + 1.0 / hp.v1));
  s.frozen.assign(static_cast<std::size_t>(p), 0);
  return s;
}

FitResult fit_batch(const StandardizedDataset& data, const Hyperparameters& hp,
                    const BatchConfig& cfg) {
  hp.validate();
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  FitResult out;
  out.algorithm = Algorithm::Batch;
  out.v1 = hp.v1;
  const double a_n = resolve_a_n(data, hp, cfg.use_an_correction);
  out.stats.a_n = a_n;

  BatchSystem system(data);
  WoodburyCache cache;

  VariationalState s = initial_batch_state(data.p(), hp, a_n);
  if (cfg.fixed_theta) s.theta_hat = *cfg.fixed_theta;
  if (cfg.fixed_sigma2) {
    s.sigma2_hat = *cfg.fixed_sigma2;
    s = update_sigma_j_batch(std::move(s), hp, a_n);
  }

  auto mu_step = [&](int iter) {
    if (!cfg.woodbury) {
      s.mu = system.solve_mu(s.phi, hp.v1);
      return;
    }
    if ((iter - 1) % cfg.woodbury_rebuild_every == 0) cache = WoodburyCache{};
    WoodburyStep step;
    s = update_mu_woodbury(std::move(s), cache, system, hp, cfg.linear_solver_tol, &step);
    out.stats.woodbury_q.push_back(step.q);
    if (step.rebuilt) ++out.stats.woodbury_rebuilds;
    if (step.fell_back) ++out.stats.woodbury_fallbacks;
    if (cfg.audit_woodbury) {
      const Vector direct = system.solve_mu(s.phi, hp.v1);
      const double dev = ((s.mu - direct).array().abs() / (1.0 + direct.array().abs())).maxCoeff();
      out.stats.woodbury_deviation.push_back(dev);
    }
  };

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const Vector phi_prev = s.phi;
    if (cfg.order == UpdateOrder::Box) {
      mu_step(iter);
      s = update_sigma_j_batch(std::move(s), hp, a_n);
    } else {
      s = update_sigma_j_batch(std::move(s), hp, a_n);
      mu_step(iter);
    }
    s = update_phi_batch(std::move(s), hp, &out.stats.last_logits);
    if (!cfg.fixed_theta) s.theta_hat = theta_map(s.phi, hp);
    if (!cfg.fixed_sigma2) {
      s = update_sigma2_batch(std::move(s), data, hp, cfg.numerator, cfg.denominator);
    }
    s.iter = iter;

    if (cfg.record_elbo) out.elbo_trace.push_back(compute_elbo(s, data, hp).total);
    const double dh = max_entropy_change(phi_prev, s.phi);
    out.entropy_trace.push_back(dh);
    out.iterations = iter;
    if (cfg.on_iteration) cfg.on_iteration(s);
    if (dh < cfg.entropy_tol) {
      out.converged = true;
      break;
    }
  }

  out.state = std::move(s);
  finalize(out);
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace ssvb
