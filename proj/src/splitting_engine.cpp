#include <algorithm>
#include <cmath>

#include "ccp/convex.hpp"
#include "ccp/error.hpp"

namespace ccp {
namespace {

constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kEqualityScale = 1e3;
constexpr double kPolishDelta = 1e-9;

double inf_norm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

bool is_equality(double l, double u) { return l == u; }

VectorXd row_penalties(const QpForm& qp, double rho) {
  VectorXd rho_vec(qp.A.rows());
  for (Eigen::Index i = 0; i < qp.A.rows(); ++i) {
    if (is_equality(qp.l(i), qp.u(i))) {
      rho_vec(i) = kEqualityScale * rho;
    } else if (std::isinf(qp.l(i)) && std::isinf(qp.u(i))) {
      rho_vec(i) = kRhoMin;
    } else {
      rho_vec(i) = rho;
    }
  }
  return rho_vec;
}

VectorXd clamp(const VectorXd& v, const VectorXd& lo, const VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

double bound_violation(const VectorXd& Ax, const VectorXd& l, const VectorXd& u) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < Ax.size(); ++i) {
    worst = std::max(worst, l(i) - Ax(i));
    worst = std::max(worst, Ax(i) - u(i));
  }
  return worst;
}

// Primal infeasibility certificate from the last dual increment: A' dy ~ 0
// while the support function of [l, u] along dy is negative.
bool certifies_infeasibility(const QpForm& qp, const VectorXd& dy, double eps) {
  const double ndy = inf_norm(dy);
  if (ndy < 1e-12) return false;
  if (inf_norm(qp.A.transpose() * dy) > eps * ndy) return false;
  double support = 0.0;
  for (Eigen::Index i = 0; i < dy.size(); ++i) {
    if (std::abs(dy(i)) <= eps * ndy) continue;
    const double bound = dy(i) > 0.0 ? qp.u(i) : qp.l(i);
    if (std::isinf(bound)) return false;
    support += bound * dy(i);
  }
  return support < -eps * ndy;
}

}  // namespace

SplittingEngine::SplittingEngine(EngineSettings settings)
    : settings_(settings) {}

void SplittingEngine::ensure_factorization(const QpForm& qp,
                                           const VectorXd& rho_vec) {
  if (have_factor_ && cached_P_.rows() == qp.P.rows() &&
      cached_A_.rows() == qp.A.rows() && cached_A_.cols() == qp.A.cols() &&
      cached_rho_.size() == rho_vec.size() && cached_P_ == qp.P &&
      cached_A_ == qp.A && cached_rho_ == rho_vec) {
    return;
  }
  const Eigen::Index n = qp.P.rows();
  MatrixXd K = qp.P;
  K.diagonal().array() += settings_.sigma;
  if (qp.A.rows() > 0) {
    K.noalias() += qp.A.transpose() * rho_vec.asDiagonal() * qp.A;
  }
  llt_.compute(K);
  if (llt_.info() != Eigen::Success) {
    throw Error(ErrorCode::kEngine,
                "splitting engine: reduced system not positive definite (n=" +
                    std::to_string(n) + ")");
  }
  cached_P_ = qp.P;
  cached_A_ = qp.A;
  cached_rho_ = rho_vec;
  have_factor_ = true;
  ++factorizations_;
}

bool SplittingEngine::try_polish(const QpForm& qp, double tol,
                                 QpResult& out) const {
  const Eigen::Index n = qp.P.rows();
  const Eigen::Index rows = qp.A.rows();
  std::vector<Eigen::Index> active;
  std::vector<int> side;  // -1 lower, +1 upper, 0 equality
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (is_equality(qp.l(i), qp.u(i))) {
      active.push_back(i);
      side.push_back(0);
      continue;
    }
    const bool lower = std::isfinite(qp.l(i)) && out.z(i) - qp.l(i) < -out.y(i);
    const bool upper = std::isfinite(qp.u(i)) && qp.u(i) - out.z(i) < out.y(i);
    if (lower) {
      active.push_back(i);
      side.push_back(-1);
    } else if (upper) {
      active.push_back(i);
      side.push_back(1);
    }
  }
  const Eigen::Index k = static_cast<Eigen::Index>(active.size());
  MatrixXd K0 = MatrixXd::Zero(n + k, n + k);
  VectorXd rhs(n + k);
  K0.topLeftCorner(n, n) = qp.P;
  rhs.head(n) = -qp.q;
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index i = active[static_cast<std::size_t>(j)];
    K0.block(n + j, 0, 1, n) = qp.A.row(i);
    K0.block(0, n + j, n, 1) = qp.A.row(i).transpose();
    rhs(n + j) = side[static_cast<std::size_t>(j)] < 0 ? qp.l(i) : qp.u(i);
  }
  MatrixXd Kreg = K0;
  Kreg.topLeftCorner(n, n).diagonal().array() += kPolishDelta;
  Kreg.bottomRightCorner(k, k).diagonal().array() -= kPolishDelta;
  Eigen::PartialPivLU<MatrixXd> lu(Kreg);
  VectorXd sol = lu.solve(rhs);
  for (int refine = 0; refine < 5; ++refine) {
    const VectorXd r = rhs - K0 * sol;
    if (inf_norm(r) < 1e-14) break;
    sol += lu.solve(r);
  }
  if (!sol.allFinite()) return false;

  VectorXd x = sol.head(n);
  VectorXd y = VectorXd::Zero(rows);
  double sign_violation = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::Index i = active[static_cast<std::size_t>(j)];
    const double yi = sol(n + j);
    y(i) = yi;
    const int s = side[static_cast<std::size_t>(j)];
    if (s < 0) sign_violation = std::max(sign_violation, yi);
    if (s > 0) sign_violation = std::max(sign_violation, -yi);
  }
  const VectorXd Ax = qp.A * x;
  const double rp = bound_violation(Ax, qp.l, qp.u);
  const double rd = inf_norm(qp.P * x + qp.q + qp.A.transpose() * y);
  if (std::max({rp, rd, sign_violation}) > tol) return false;
  out.x = x;
  out.y = y;
  out.z = clamp(Ax, qp.l, qp.u);
  out.primal_residual = rp;
  out.dual_residual = rd;
  out.status = SubproblemStatus::kOptimal;
  out.polished = true;
  return true;
}

QpResult SplittingEngine::solve(const QpForm& qp, double tol,
                                const VectorXd* warm_x, const VectorXd* warm_y,
                                double warm_rho) {
  const Eigen::Index n = qp.q.size();
  const Eigen::Index rows = qp.A.rows();
  if (qp.P.rows() != n || qp.P.cols() != n || qp.A.cols() != n ||
      qp.l.size() != rows || qp.u.size() != rows) {
    throw Error(ErrorCode::kDimension, "splitting engine: inconsistent QP data");
  }
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "splitting engine: tol must be > 0");
  }

  double rho = warm_rho > 0.0 ? warm_rho : settings_.rho_initial;
  VectorXd rho_vec = row_penalties(qp, rho);
  ensure_factorization(qp, rho_vec);

  QpResult out;
  VectorXd x = (warm_x && warm_x->size() == n) ? *warm_x : VectorXd::Zero(n);
  VectorXd z = clamp(qp.A * x, qp.l, qp.u);
  VectorXd y = (warm_y && warm_y->size() == rows) ? *warm_y : VectorXd::Zero(rows);
  const double alpha = settings_.over_relaxation;
  const double sigma = settings_.sigma;

  double last_polish_residual = kInf;
  std::size_t last_polish_iter = 0;
  VectorXd dy = VectorXd::Zero(rows);
  std::size_t rebalance_gap = std::max<std::size_t>(settings_.rebalance_interval, 1);
  std::size_t next_rebalance = rebalance_gap;

  auto fill = [&](SubproblemStatus status, std::size_t iter, double rp, double rd) {
    out.x = x;
    out.y = y;
    out.z = z;
    out.status = status;
    out.iterations = iter;
    out.primal_residual = rp;
    out.dual_residual = rd;
    out.rho = rho;
  };

  // A warm start may already be optimal; check before iterating.
  {
    const VectorXd Ax = qp.A * x;
    const double rp = std::max(inf_norm(Ax - z), bound_violation(Ax, qp.l, qp.u));
    const double rd = inf_norm(qp.P * x + qp.q + qp.A.transpose() * y);
    if (std::max(rp, rd) <= tol) {
      fill(SubproblemStatus::kOptimal, 0, rp, rd);
      return out;
    }
  }

  const std::size_t max_iter = settings_.max_iter_splitting;
  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    VectorXd rhs = sigma * x - qp.q;
    if (rows > 0) rhs.noalias() += qp.A.transpose() * (rho_vec.cwiseProduct(z) - y);
    const VectorXd x_tilde = llt_.solve(rhs);
    const VectorXd z_tilde = qp.A * x_tilde;
    x = alpha * x_tilde + (1.0 - alpha) * x;
    const VectorXd z_relaxed = alpha * z_tilde + (1.0 - alpha) * z;
    const VectorXd z_next =
        clamp(z_relaxed + y.cwiseQuotient(rho_vec), qp.l, qp.u);
    dy = rho_vec.cwiseProduct(z_relaxed - z_next);
    y += dy;
    z = z_next;

    if (iter % settings_.check_interval != 0 && iter != 1) continue;

    const VectorXd Ax = qp.A * x;
    const VectorXd Px = qp.P * x;
    const VectorXd Aty = qp.A.transpose() * y;
    const double rp = inf_norm(Ax - z);
    const double rd = inf_norm(Px + qp.q + Aty);
    if (std::max(rp, rd) <= tol) {
      fill(SubproblemStatus::kOptimal, iter, rp, rd);
      return out;
    }
    if (certifies_infeasibility(qp, dy, settings_.infeasibility_tol)) {
      fill(SubproblemStatus::kInfeasible, iter, rp, rd);
      return out;
    }
    const double res = std::max(rp, rd);
    if (settings_.polish && rows > 0 &&
        (res < 0.1 * last_polish_residual || iter - last_polish_iter >= 200)) {
      last_polish_residual = res;
      last_polish_iter = iter;
      fill(SubproblemStatus::kMaxIter, iter, rp, rd);
      if (try_polish(qp, tol, out)) return out;
    }
    if (iter >= next_rebalance && rows > 0) {
      next_rebalance = iter + rebalance_gap;
      const double prim_scale =
          std::max({inf_norm(Ax), inf_norm(z), 1e-10});
      const double dual_scale =
          std::max({inf_norm(Px), inf_norm(Aty), inf_norm(qp.q), 1e-10});
      const double ratio = (rp / prim_scale) / std::max(rd / dual_scale, 1e-300);
      if (ratio > settings_.rebalance_ratio ||
          ratio < 1.0 / settings_.rebalance_ratio) {
        const double new_rho =
            std::clamp(rho * std::sqrt(ratio), kRhoMin, kRhoMax);
        if (new_rho != rho) {
          rho = new_rho;
          // Back off after every change so that rho settles and the
          // iteration is not restarted forever by an oscillating ratio.
          rebalance_gap *= 2;
          next_rebalance = iter + rebalance_gap;
          rho_vec = row_penalties(qp, rho);
          ensure_factorization(qp, rho_vec);
        }
      }
    }
  }
  const VectorXd Ax = qp.A * x;
  const double rp = inf_norm(Ax - z);
  const double rd = inf_norm(qp.P * x + qp.q + qp.A.transpose() * y);
  fill(SubproblemStatus::kMaxIter, max_iter, rp, rd);
  if (settings_.polish && rows > 0) try_polish(qp, tol, out);
  return out;
}

}  // namespace ccp
