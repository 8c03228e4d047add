#include <algorithm>
#include <cmath>

#include "ccp/convex.hpp"
#include "ccp/error.hpp"

namespace ccp {
namespace {

double inf_norm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

double composite_max(const CompositeTerm& term, const VectorXd& v,
                     std::size_t* argmax = nullptr) {
  double best = -kInf;
  for (std::size_t i = 0; i < term.pieces.size(); ++i) {
    const double val = term.pieces[i].value(v);
    if (val > best) {
      best = val;
      if (argmax) *argmax = i;
    }
  }
  return best;
}

// Linear part of a SubproblemSpec as l <= A v <= u, plus the layout needed to map
// row multipliers back onto its constraint groups.
struct LinearLayout {
  QpForm qp;
  Eigen::Index g_begin = 0, e_begin = 0, c_begin = 0, b_begin = 0;
  std::vector<Eigen::Index> bound_coord;
  std::vector<std::size_t> curved_index;  // spec curved rows kept as linear rows
};

LinearLayout build_linear(const SubproblemSpec& spec) {
  const Eigen::Index n = static_cast<Eigen::Index>(spec.size());
  const Eigen::Index N = n;
  LinearLayout lay;
  std::vector<std::size_t> curved;
  for (std::size_t c = 0; c < spec.curved.size(); ++c) {
    curved.push_back(c);
  }
  const VectorXd& lo = spec.lower;
  const VectorXd& hi = spec.upper;
  for (Eigen::Index j = 0; j < N; ++j) {
    if (std::isfinite(lo(j)) || std::isfinite(hi(j))) lay.bound_coord.push_back(j);
  }
  const Eigen::Index rows = spec.G.rows() + spec.E.rows() +
                            static_cast<Eigen::Index>(curved.size()) +
                            static_cast<Eigen::Index>(lay.bound_coord.size());
  QpForm& qp = lay.qp;
  qp.P = MatrixXd::Zero(N, N);
  qp.P.topLeftCorner(n, n) = spec.P;
  qp.q = VectorXd::Zero(N);
  qp.q.head(n) = spec.q;
  qp.A = MatrixXd::Zero(rows, N);
  qp.l = VectorXd::Constant(rows, -kInf);
  qp.u = VectorXd::Constant(rows, kInf);
  Eigen::Index r = 0;
  lay.g_begin = r;
  for (Eigen::Index i = 0; i < spec.G.rows(); ++i, ++r) {
    qp.A.block(r, 0, 1, n) = spec.G.row(i);
    qp.u(r) = spec.h(i);
  }
  lay.e_begin = r;
  for (Eigen::Index i = 0; i < spec.E.rows(); ++i, ++r) {
    qp.A.block(r, 0, 1, n) = spec.E.row(i);
    qp.l(r) = spec.e(i);
    qp.u(r) = spec.e(i);
  }
  lay.c_begin = r;
  for (std::size_t c : curved) {
    qp.A.block(r, 0, 1, n) = spec.curved[c].lin.transpose();
    qp.u(r) = -spec.curved[c].offset;
    lay.curved_index.push_back(c);
    ++r;
  }
  lay.b_begin = r;
  for (Eigen::Index j : lay.bound_coord) {
    qp.A(r, j) = 1.0;
    qp.l(r) = lo(j);
    qp.u(r) = hi(j);
    ++r;
  }
  return lay;
}


}  // namespace

// --------------------------------------------------------------- CurvedRow

double CurvedRow::value(const VectorXd& v) const {
  return quad.dot(v.cwiseAbs2()) + lin.dot(v) + offset;
}

VectorXd CurvedRow::gradient(const VectorXd& v) const {
  return 2.0 * quad.cwiseProduct(v) + lin;
}

bool CurvedRow::is_affine() const {
  return quad.size() == 0 || (quad.array() == 0.0).all();
}

double CompositeTerm::value(const VectorXd& v) const {
  if (pieces.empty()) return 0.0;
  return weight * std::max(0.0, composite_max(*this, v));
}

// ---------------------------------------------------------- SubproblemSpec

SubproblemSpec SubproblemSpec::empty(std::size_t n) {
  const auto N = static_cast<Eigen::Index>(n);
  SubproblemSpec spec;
  spec.P = MatrixXd::Zero(N, N);
  spec.q = VectorXd::Zero(N);
  spec.G = MatrixXd::Zero(0, N);
  spec.h = VectorXd::Zero(0);
  spec.E = MatrixXd::Zero(0, N);
  spec.e = VectorXd::Zero(0);
  spec.lower = VectorXd::Constant(N, -kInf);
  spec.upper = VectorXd::Constant(N, kInf);
  return spec;
}

bool SubproblemSpec::is_polyhedral() const {
  if (!composite.empty()) return false;
  return std::all_of(curved.begin(), curved.end(),
                     [](const CurvedRow& r) { return r.is_affine(); });
}

double SubproblemSpec::objective(const VectorXd& v) const {
  double val = 0.5 * v.dot(P * v) + q.dot(v) + constant;
  for (const auto& term : composite) val += term.value(v);
  return val;
}

void SubproblemSpec::check() const {
  const auto n = q.size();
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kDimension, "subproblem spec: " + what);
  };
  if (P.rows() != n || P.cols() != n) fail("P must be n x n");
  if (G.cols() != n || G.rows() != h.size()) fail("G/h mismatch");
  if (E.cols() != n || E.rows() != e.size()) fail("E/e mismatch");
  if (lower.size() != n || upper.size() != n) fail("bounds length");
  for (const auto& row : curved) {
    if (row.lin.size() != n || (row.quad.size() != 0 && row.quad.size() != n)) {
      fail("curved row length");
    }
    if (row.quad.size() != 0 && (row.quad.array() < 0.0).any()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "subproblem spec: curved row with negative curvature");
    }
  }
  for (const auto& term : composite) {
    if (term.weight < 0.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "subproblem spec: negative composite weight");
    }
    for (const auto& piece : term.pieces) {
      if (piece.lin.size() != n) fail("composite piece length");
    }
  }
  if (!(P - P.transpose()).isZero(1e-12 * (1.0 + P.cwiseAbs().maxCoeff()))) {
    throw Error(ErrorCode::kInvalidArgument, "subproblem spec: P not symmetric");
  }
}

const char* to_string(SubproblemStatus status) {
  switch (status) {
    case SubproblemStatus::kOptimal:
      return "optimal";
    case SubproblemStatus::kMaxIter:
      return "max_iter";
    case SubproblemStatus::kInfeasible:
      return "infeasible-certificate";
  }
  return "unknown";
}

// -------------------------------------------------------- SubproblemSolver

SubproblemSolver::SubproblemSolver(EngineSettings settings)
    : settings_(settings), engine_(settings) {}

SubproblemSolution SubproblemSolver::solve(const SubproblemSpec& spec, double tol,
                                           const SubproblemSolution* warm,
                                           EngineKind kind) {
  spec.check();
  if (!(tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "subproblem: tol must be > 0");
  }
  if (kind == EngineKind::kSplitting && !spec.is_polyhedral()) {
    throw Error(ErrorCode::kInvalidArgument,
                "splitting engine requires a polyhedral subproblem");
  }
  const bool fallback =
      kind == EngineKind::kFallback ||
      (kind == EngineKind::kAuto && !spec.is_polyhedral());
  return fallback ? solve_fallback(spec, tol, warm)
                  : solve_splitting(spec, tol, warm);
}

SubproblemSolution SubproblemSolver::solve_splitting(const SubproblemSpec& spec,
                                                     double tol,
                                                     const SubproblemSolution* warm) {
  LinearLayout lay = build_linear(spec);
  const VectorXd* wx = nullptr;
  const VectorXd* wy = nullptr;
  double wrho = 0.0;
  if (warm != nullptr) {
    if (warm->x.size() == lay.qp.q.size()) wx = &warm->x;
    if (warm->warm_y.size() == lay.qp.A.rows()) wy = &warm->warm_y;
    wrho = warm->warm_rho;
  }
  QpResult res = engine_.solve(lay.qp, tol, wx, wy, wrho);

  SubproblemSolution sol;
  sol.x = res.x;
  sol.status = res.status;
  sol.iterations = res.iterations;
  sol.primal_residual = res.primal_residual;
  sol.dual_residual = res.dual_residual;
  sol.dual_ineq = res.y.segment(lay.g_begin, spec.G.rows());
  sol.dual_eq = res.y.segment(lay.e_begin, spec.E.rows());
  sol.dual_curved = VectorXd::Zero(static_cast<Eigen::Index>(spec.curved.size()));
  for (std::size_t k = 0; k < lay.curved_index.size(); ++k) {
    sol.dual_curved(static_cast<Eigen::Index>(lay.curved_index[k])) =
        res.y(lay.c_begin + static_cast<Eigen::Index>(k));
  }
  sol.dual_bound = VectorXd::Zero(static_cast<Eigen::Index>(spec.size()));
  for (std::size_t k = 0; k < lay.bound_coord.size(); ++k) {
    sol.dual_bound(lay.bound_coord[k]) =
        res.y(lay.b_begin + static_cast<Eigen::Index>(k));
  }
  sol.objective_value = spec.objective(sol.x);
  sol.warm_y = res.y;
  sol.warm_z = res.z;
  sol.warm_rho = res.rho;
  return sol;
}

namespace {

// Every inequality of the fallback written as c_j(v) = J_j v + off_j +
// quad_j' v^2 <= 0 over v = (x, t).
struct InequalitySystem {
  MatrixXd J;
  VectorXd off;
  std::vector<std::pair<Eigen::Index, VectorXd>> quad;
  Eigen::Index g_begin = 0, c_begin = 0, p_begin = 0, b_begin = 0;
  std::vector<std::pair<std::size_t, std::size_t>> piece_rows;
  std::vector<std::pair<Eigen::Index, double>> bound_rows;  // coordinate, +1 upper / -1 lower

  VectorXd value(const VectorXd& v) const {
    VectorXd c = J * v + off;
    for (const auto& [r, d] : quad) c(r) += d.dot(v.cwiseAbs2());
    return c;
  }
  MatrixXd jacobian(const VectorXd& v) const {
    MatrixXd Jv = J;
    for (const auto& [r, d] : quad) Jv.row(r) += 2.0 * d.cwiseProduct(v).transpose();
    return Jv;
  }
  VectorXd hessian_diag(const VectorXd& lam, Eigen::Index N) const {
    VectorXd h = VectorXd::Zero(N);
    for (const auto& [r, d] : quad) h += 2.0 * lam(r) * d;
    return h;
  }
};

InequalitySystem build_inequalities(const SubproblemSpec& spec) {
  const Eigen::Index n = static_cast<Eigen::Index>(spec.size());
  const Eigen::Index K = static_cast<Eigen::Index>(spec.composite.size());
  const Eigen::Index N = n + K;
  InequalitySystem sys;
  std::vector<VectorXd> rows;
  std::vector<double> offs;
  auto pad = [&](const VectorXd& head) {
    VectorXd r = VectorXd::Zero(N);
    r.head(n) = head;
    return r;
  };
  auto push_quad = [&](const VectorXd& q) {
    if (q.size() != 0 && (q.array() != 0.0).any()) {
      sys.quad.emplace_back(static_cast<Eigen::Index>(rows.size()) - 1, pad(q));
    }
  };
  sys.g_begin = 0;
  for (Eigen::Index i = 0; i < spec.G.rows(); ++i) {
    rows.push_back(pad(spec.G.row(i).transpose()));
    offs.push_back(-spec.h(i));
  }
  sys.c_begin = static_cast<Eigen::Index>(rows.size());
  for (const auto& row : spec.curved) {
    rows.push_back(pad(row.lin));
    offs.push_back(row.offset);
    push_quad(row.quad);
  }
  sys.p_begin = static_cast<Eigen::Index>(rows.size());
  for (std::size_t k = 0; k < spec.composite.size(); ++k) {
    for (std::size_t i = 0; i < spec.composite[k].pieces.size(); ++i) {
      const ConstraintPiece& piece = spec.composite[k].pieces[i];
      VectorXd r = pad(piece.lin);
      r(n + static_cast<Eigen::Index>(k)) = -1.0;
      rows.push_back(r);
      offs.push_back(piece.offset);
      push_quad(piece.quad);
      sys.piece_rows.emplace_back(k, i);
    }
  }
  sys.b_begin = static_cast<Eigen::Index>(rows.size());
  for (Eigen::Index j = 0; j < N; ++j) {
    const double lo = j < n ? spec.lower(j) : 0.0;
    const double hi = j < n ? spec.upper(j) : kInf;
    if (std::isfinite(hi)) {
      VectorXd r = VectorXd::Zero(N);
      r(j) = 1.0;
      rows.push_back(r);
      offs.push_back(-hi);
      sys.bound_rows.emplace_back(j, 1.0);
    }
    if (std::isfinite(lo)) {
      VectorXd r = VectorXd::Zero(N);
      r(j) = -1.0;
      rows.push_back(r);
      offs.push_back(lo);
      sys.bound_rows.emplace_back(j, -1.0);
    }
  }
  sys.J = MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), N);
  sys.off.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    sys.J.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    sys.off(static_cast<Eigen::Index>(r)) = offs[r];
  }
  return sys;
}

// Largest step in (0, 1] keeping v + a dv > 0 componentwise.
double max_step(const VectorXd& v, const VectorXd& dv) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
  }
  return a;
}

}  // namespace

// Primal-dual interior point on the epigraph form. Composite terms become
// variables t_k >= 0 with cost w_k and rows h_ki(x) - t_k <= 0; affine rows,
// diagonal-quadratic rows and finite bounds all enter as c_j(v) + s_j = 0
// with s, lambda > 0. Each iteration takes a predictor-corrector Newton
// step on the perturbed KKT system using one dense factorization.
SubproblemSolution SubproblemSolver::solve_fallback(const SubproblemSpec& spec,
                                                    double tol,
                                                    const SubproblemSolution* warm) {
  best_trace_.clear();
  const Eigen::Index n = static_cast<Eigen::Index>(spec.size());
  const Eigen::Index K = static_cast<Eigen::Index>(spec.composite.size());
  const Eigen::Index N = n + K;
  const Eigen::Index me = spec.E.rows();
  const InequalitySystem sys = build_inequalities(spec);
  const Eigen::Index p = sys.J.rows();

  MatrixXd P = MatrixXd::Zero(N, N);
  P.topLeftCorner(n, n) = spec.P;
  VectorXd q = VectorXd::Zero(N);
  q.head(n) = spec.q;
  for (Eigen::Index k = 0; k < K; ++k) q(n + k) = spec.composite[static_cast<std::size_t>(k)].weight;
  MatrixXd E = MatrixXd::Zero(me, N);
  E.leftCols(n) = spec.E;

  VectorXd v(N);
  if (warm != nullptr && warm->x.size() == n) {
    v.head(n) = warm->x;
  } else {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double lo = spec.lower(j), hi = spec.upper(j);
      if (std::isfinite(lo) && std::isfinite(hi)) v(j) = 0.5 * (lo + hi);
      else if (std::isfinite(lo)) v(j) = lo + 1.0;
      else if (std::isfinite(hi)) v(j) = hi - 1.0;
      else v(j) = 0.0;
    }
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    v(n + k) = std::max(0.0, composite_max(spec.composite[static_cast<std::size_t>(k)],
                                           v.head(n))) + 1.0;
  }
  VectorXd s = (-sys.value(v)).cwiseMax(1.0);
  VectorXd lam = VectorXd::Ones(p);
  VectorXd nu = VectorXd::Zero(me);

  const std::size_t max_iter = std::min<std::size_t>(settings_.max_iter_fallback, 500);
  const double reg = 1e-11;
  double best = kInf;
  double rd_norm = kInf, primal = kInf;
  bool converged = false;
  std::size_t it = 0;
  std::size_t tiny_steps = 0;
  for (; it < max_iter; ++it) {
    const VectorXd c = sys.value(v);
    const MatrixXd Jc = sys.jacobian(v);
    const VectorXd rd = P * v + q + Jc.transpose() * lam + E.transpose() * nu;
    const VectorXd rp = c + s;
    const VectorXd re = E * v - spec.e;
    rd_norm = inf_norm(rd);
    primal = std::max(p > 0 ? c.maxCoeff() : 0.0, 0.0);
    primal = std::max(primal, inf_norm(re));
    const double comp = p > 0 ? s.cwiseProduct(lam).maxCoeff() : 0.0;
    if (primal <= std::max(tol, 1e-9)) {
      best = std::min(best, spec.objective(v.head(n)));
    }
    if (std::isfinite(best)) best_trace_.push_back(best);
    if (rd_norm <= tol && primal <= tol && comp <= tol) {
      converged = true;
      break;
    }
    if (p > 0 && lam.maxCoeff() > 1e12) break;  // diverging multipliers

    const VectorXd D = lam.cwiseQuotient(s);
    MatrixXd M = P;
    M.diagonal() += sys.hessian_diag(lam, N);
    M.noalias() += Jc.transpose() * D.asDiagonal() * Jc;
    M.diagonal().array() += reg;
    MatrixXd KKT = MatrixXd::Zero(N + me, N + me);
    KKT.topLeftCorner(N, N) = M;
    KKT.topRightCorner(N, me) = E.transpose();
    KKT.bottomLeftCorner(me, N) = E;
    KKT.bottomRightCorner(me, me).diagonal().setConstant(-reg);
    const Eigen::PartialPivLU<MatrixXd> lu(KKT);

    auto direction = [&](const VectorXd& rc, VectorXd& dv, VectorXd& dlam, VectorXd& ds,
                         VectorXd& dnu) {
      VectorXd rhs(N + me);
      rhs.head(N) = -rd - Jc.transpose() * (D.cwiseProduct(rp) - rc.cwiseQuotient(s));
      rhs.tail(me) = -re;
      const VectorXd sol = lu.solve(rhs);
      dv = sol.head(N);
      dnu = sol.tail(me);
      ds = -rp - Jc * dv;
      dlam = D.cwiseProduct(rp + Jc * dv) - rc.cwiseQuotient(s);
    };

    VectorXd dv, dlam, ds, dnu;
    const double mu = p > 0 ? s.dot(lam) / static_cast<double>(p) : 0.0;
    VectorXd rc = s.cwiseProduct(lam);
    direction(rc, dv, dlam, ds, dnu);
    if (p > 0) {
      const double a_aff = std::min(max_step(s, ds), max_step(lam, dlam));
      const double mu_aff =
          (s + a_aff * ds).dot(lam + a_aff * dlam) / static_cast<double>(p);
      const double centering = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
      rc += ds.cwiseProduct(dlam) - VectorXd::Constant(p, centering * mu);
      direction(rc, dv, dlam, ds, dnu);
    }
    // Near the solution the KKT matrix can lose rank; keep the last finite
    // iterate rather than propagating NaN.
    if (!dv.allFinite() || !ds.allFinite() || !dlam.allFinite() || !dnu.allFinite()) break;
    const double a = p > 0 ? std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(lam, dlam)))
                           : 1.0;
    v += a * dv;
    s += a * ds;
    lam += a * dlam;
    nu += a * dnu;
    if (p > 0) {
      s = s.cwiseMax(1e-300);
      lam = lam.cwiseMax(1e-300);
    }
    tiny_steps = a < 1e-8 ? tiny_steps + 1 : 0;
    if (tiny_steps >= 5) break;
  }

  SubproblemSolution sol;
  sol.x = v.head(n);
  sol.iterations = it;
  sol.objective_value = spec.objective(sol.x);
  sol.primal_residual = primal;
  sol.dual_residual = rd_norm;
  if (converged) {
    sol.status = SubproblemStatus::kOptimal;
  } else if (primal > settings_.infeasibility_tol &&
             (p == 0 || lam.maxCoeff() > 1e6)) {
    sol.status = SubproblemStatus::kInfeasible;
  } else {
    sol.status = SubproblemStatus::kMaxIter;
  }

  sol.dual_ineq = lam.segment(sys.g_begin, spec.G.rows());
  sol.dual_eq = nu;
  sol.dual_curved = lam.segment(sys.c_begin, static_cast<Eigen::Index>(spec.curved.size()));
  sol.dual_composite.resize(spec.composite.size());
  for (std::size_t k = 0; k < spec.composite.size(); ++k) {
    sol.dual_composite[k] =
        VectorXd::Zero(static_cast<Eigen::Index>(spec.composite[k].pieces.size()));
  }
  for (std::size_t r = 0; r < sys.piece_rows.size(); ++r) {
    const auto [k, i] = sys.piece_rows[r];
    sol.dual_composite[k](static_cast<Eigen::Index>(i)) =
        lam(sys.p_begin + static_cast<Eigen::Index>(r));
  }
  sol.dual_bound = VectorXd::Zero(n);
  for (std::size_t r = 0; r < sys.bound_rows.size(); ++r) {
    const auto [j, sign] = sys.bound_rows[r];
    if (j < n) sol.dual_bound(j) += sign * lam(sys.b_begin + static_cast<Eigen::Index>(r));
  }
  return sol;
}

SubproblemSolution solve_subproblem(const SubproblemSpec& spec, double tol,
                                    const SubproblemSolution* warm) {
  SubproblemSolver solver;
  return solver.solve(spec, tol, warm);
}

// ------------------------------------------------------------ KKT residual

double kkt_residual(const SubproblemSpec& spec, const SubproblemSolution& sol) {
  const Eigen::Index n = static_cast<Eigen::Index>(spec.size());
  if (sol.x.size() != n) {
    throw Error(ErrorCode::kDimension, "kkt_residual: solution length mismatch");
  }
  const VectorXd& x = sol.x;
  auto or_zero = [](const VectorXd& v, Eigen::Index len) {
    return v.size() == len ? v : VectorXd::Zero(len);
  };
  const VectorXd lam = or_zero(sol.dual_ineq, spec.G.rows());
  const VectorXd mu = or_zero(sol.dual_eq, spec.E.rows());
  const VectorXd nu = or_zero(sol.dual_bound, n);
  const VectorXd lam_c =
      or_zero(sol.dual_curved, static_cast<Eigen::Index>(spec.curved.size()));

  double primal = 0.0, dual_sign = 0.0, comp = 0.0;
  VectorXd station = spec.P * x + spec.q;

  if (spec.G.rows() > 0) {
    const VectorXd slack = spec.h - spec.G * x;
    primal = std::max(primal, (-slack).cwiseMax(0.0).maxCoeff());
    dual_sign = std::max(dual_sign, (-lam).cwiseMax(0.0).maxCoeff());
    comp = std::max(comp, lam.cwiseProduct(slack).cwiseAbs().maxCoeff());
    station += spec.G.transpose() * lam;
  }
  if (spec.E.rows() > 0) {
    primal = std::max(primal, inf_norm(spec.E * x - spec.e));
    station += spec.E.transpose() * mu;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    primal = std::max({primal, spec.lower(j) - x(j), x(j) - spec.upper(j)});
    if (nu(j) > 0.0) {
      if (std::isinf(spec.upper(j))) dual_sign = std::max(dual_sign, nu(j));
      else comp = std::max(comp, std::abs(nu(j) * (spec.upper(j) - x(j))));
    } else if (nu(j) < 0.0) {
      if (std::isinf(spec.lower(j))) dual_sign = std::max(dual_sign, -nu(j));
      else comp = std::max(comp, std::abs(nu(j) * (x(j) - spec.lower(j))));
    }
  }
  station += nu;
  for (std::size_t c = 0; c < spec.curved.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    const double val = spec.curved[c].value(x);
    primal = std::max(primal, val);
    dual_sign = std::max(dual_sign, -lam_c(ci));
    comp = std::max(comp, std::abs(lam_c(ci) * val));
    station += lam_c(ci) * spec.curved[c].gradient(x);
  }
  for (std::size_t k = 0; k < spec.composite.size(); ++k) {
    const CompositeTerm& term = spec.composite[k];
    const auto len = static_cast<Eigen::Index>(term.pieces.size());
    const VectorXd w = k < sol.dual_composite.size()
                           ? or_zero(sol.dual_composite[k], len)
                           : VectorXd::Zero(len);
    const double positive = std::max(0.0, composite_max(term, x));
    double total = 0.0;
    for (Eigen::Index i = 0; i < len; ++i) {
      const ConstraintPiece& piece = term.pieces[static_cast<std::size_t>(i)];
      dual_sign = std::max(dual_sign, -w(i));
      comp = std::max(comp, std::abs(w(i) * (positive - piece.value(x))));
      station += w(i) * piece.gradient(x);
      total += w(i);
    }
    dual_sign = std::max(dual_sign, total - term.weight);
    comp = std::max(comp, std::abs((term.weight - total) * positive));
  }
  return std::max({std::max(primal, 0.0), dual_sign, inf_norm(station), comp});
}

VectorXd project_onto_region(const FeasibleRegion& region, const VectorXd& point,
                             SubproblemSolver& solver, double tol) {
  if (region.contains(point, 0.0)) return point;
  if (!region.has_linear_rows()) {
    return point.cwiseMax(region.lower).cwiseMin(region.upper);
  }
  const auto n = static_cast<std::size_t>(point.size());
  SubproblemSpec spec = SubproblemSpec::empty(n);
  spec.P = MatrixXd::Identity(point.size(), point.size());
  spec.q = -point;
  spec.G = region.A;
  spec.h = region.b;
  spec.E = region.E;
  spec.e = region.e;
  spec.lower = region.lower;
  spec.upper = region.upper;
  const SubproblemSolution sol = solver.solve(spec, tol);
  if (sol.status == SubproblemStatus::kInfeasible) {
    throw Error(ErrorCode::kEngine, "projection onto region: region infeasible");
  }
  return sol.x.cwiseMax(region.lower).cwiseMin(region.upper);
}

}  // namespace ccp
