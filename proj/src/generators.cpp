#include <cmath>
#include <random>
#include <set>

#include "ccp/error.hpp"
#include "ccp/model.hpp"

namespace ccp {
namespace {

class ParamReader {
 public:
  ParamReader(const FamilyParams& params, std::set<std::string> allowed,
              const char* family)
      : params_(params), family_(family) {
    for (const auto& [key, value] : params) {
      if (!allowed.count(key)) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string(family) + ": unknown parameter '" + key + "'");
      }
      if (!std::isfinite(value)) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string(family) + ": parameter '" + key + "' must be finite");
      }
    }
  }

  double real(const std::string& key, double fallback) const {
    auto it = params_.find(key);
    return it == params_.end() ? fallback : it->second;
  }

  std::size_t count(const std::string& key, double fallback) const {
    const double v = real(key, fallback);
    if (v < 1.0 || v != std::floor(v)) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(family_) + ": '" + key + "' must be a positive integer");
    }
    return static_cast<std::size_t>(v);
  }

  double positive(const std::string& key, double fallback) const {
    const double v = real(key, fallback);
    if (!(v > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(family_) + ": '" + key + "' must be > 0");
    }
    return v;
  }

  double alpha() const {
    const double a = real("alpha", 0.1);
    if (!(a > 0.0 && a < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(family_) + ": 'alpha' must lie in (0, 1)");
    }
    return a;
  }

 private:
  const FamilyParams& params_;
  const char* family_;
};

void empty_rows(FeasibleRegion& region, Eigen::Index d) {
  region.A = MatrixXd::Zero(0, d);
  region.b = VectorXd::Zero(0);
  region.E = MatrixXd::Zero(0, d);
  region.e = VectorXd::Zero(0);
}

// Rows j = 1..mcons are independent Gaussian vectors over the coordinates
// with mean j/d, unit variance and pairwise correlation 0.5, built from one
// shared and one private standard normal per entry.
ProblemInstance generate_norm(const FamilyParams& params, std::uint64_t seed) {
  ParamReader p(params, {"d", "mcons", "theta", "S", "alpha", "xmax"}, "norm");
  const std::size_t d = p.count("d", 20);
  const std::size_t mcons = p.count("mcons", 20);
  const double theta = p.positive("theta", 100.0);
  const std::size_t S = p.count("S", 50);
  const double alpha = p.alpha();
  const double xmax = p.positive("xmax", std::sqrt(theta));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double w = std::sqrt(0.5);
  const auto D = static_cast<Eigen::Index>(d);

  ProblemInstance inst;
  inst.name = "norm-d" + std::to_string(d) + "-m" + std::to_string(mcons) + "-S" +
              std::to_string(S) + "-seed" + std::to_string(seed);
  inst.objective.Q = MatrixXd::Zero(D, D);
  inst.objective.c = VectorXd::Constant(D, -1.0);
  empty_rows(inst.region, D);
  inst.region.lower = VectorXd::Zero(D);
  inst.region.upper = VectorXd::Constant(D, xmax);
  inst.scenarios.S = S;
  inst.scenarios.I = mcons;
  inst.scenarios.pieces.reserve(S * mcons);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t j = 1; j <= mcons; ++j) {
      const double mean = static_cast<double>(j) / static_cast<double>(d);
      const double shared = normal(rng);
      ConstraintPiece piece;
      piece.quad.resize(D);
      for (Eigen::Index i = 0; i < D; ++i) {
        const double xi = mean + w * (shared + normal(rng));
        piece.quad(i) = xi * xi;
      }
      piece.lin = VectorXd::Zero(D);
      piece.offset = -theta;
      inst.scenarios.pieces.push_back(std::move(piece));
    }
  }
  inst.risk = RiskSpec(alpha, S);
  return inst;
}

// Suppliers i ship x_ij to customers j (variable index i * m_cust + j).
// Unit costs are uniform on [0.5, 1.5]; each supplier's capacity is an equal
// share of capacity_factor times the expected total demand; scenario s asks
// that every customer demand be met jointly.
ProblemInstance generate_transport(const FamilyParams& params, std::uint64_t seed) {
  ParamReader p(params,
                {"n", "m_cust", "S", "alpha", "demand_loc", "demand_scale",
                 "capacity_factor"},
                "transport");
  const std::size_t n = p.count("n", 5);
  const std::size_t mc = p.count("m_cust", 5);
  const std::size_t S = p.count("S", 50);
  const double alpha = p.alpha();
  const double loc = p.real("demand_loc", 0.0);
  const double scale = p.positive("demand_scale", 0.25);
  const double capacity_factor = p.positive("capacity_factor", 2.0);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cost(0.5, 1.5);
  std::lognormal_distribution<double> demand(loc, scale);
  const auto d = static_cast<Eigen::Index>(n * mc);

  ProblemInstance inst;
  inst.name = "transport-n" + std::to_string(n) + "-m" + std::to_string(mc) + "-S" +
              std::to_string(S) + "-seed" + std::to_string(seed);
  inst.objective.Q = MatrixXd::Zero(d, d);
  inst.objective.c.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) inst.objective.c(k) = cost(rng);

  const double mean_demand = std::exp(loc + 0.5 * scale * scale);
  const double capacity = capacity_factor * mean_demand * static_cast<double>(mc) /
                          static_cast<double>(n);
  empty_rows(inst.region, d);
  inst.region.A = MatrixXd::Zero(static_cast<Eigen::Index>(n), d);
  inst.region.b = VectorXd::Constant(static_cast<Eigen::Index>(n), capacity);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < mc; ++j) {
      inst.region.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i * mc + j)) = 1.0;
    }
  }
  inst.region.lower = VectorXd::Zero(d);
  inst.region.upper = VectorXd::Constant(d, capacity);

  inst.scenarios.S = S;
  inst.scenarios.I = mc;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t j = 0; j < mc; ++j) {
      VectorXd lin = VectorXd::Zero(d);
      for (std::size_t i = 0; i < n; ++i) lin(static_cast<Eigen::Index>(i * mc + j)) = -1.0;
      inst.scenarios.pieces.push_back(ConstraintPiece::affine(std::move(lin), demand(rng)));
    }
  }
  inst.risk = RiskSpec(alpha, S);
  return inst;
}

// Synthetic one-factor returns: r_sk = mu_k + b_k f_s + e_sk.
ProblemInstance generate_portfolio(const FamilyParams& params, std::uint64_t seed) {
  ParamReader p(params, {"n", "S", "alpha", "gamma", "target", "cap"}, "portfolio");
  const std::size_t n = p.count("n", 10);
  const std::size_t S = p.count("S", 100);
  const double alpha = p.alpha();
  const double gamma = p.positive("gamma", 1.0);
  const double target = p.real("target", -0.02);
  const double cap = p.positive("cap", 1.0);

  std::mt19937_64 rng(seed);
  // Daily-return scales: market factor 1%, idiosyncratic noise 1.5%.
  std::uniform_real_distribution<double> mu_dist(0.0002, 0.0012);
  std::uniform_real_distribution<double> beta_dist(0.5, 1.5);
  std::normal_distribution<double> factor(0.0, 0.01);
  std::normal_distribution<double> noise(0.0, 0.015);
  const auto N = static_cast<Eigen::Index>(n);
  VectorXd mu(N), beta(N);
  for (Eigen::Index k = 0; k < N; ++k) mu(k) = mu_dist(rng);
  for (Eigen::Index k = 0; k < N; ++k) beta(k) = beta_dist(rng);
  MatrixXd returns(static_cast<Eigen::Index>(S), N);
  for (Eigen::Index s = 0; s < returns.rows(); ++s) {
    const double f = factor(rng);
    for (Eigen::Index k = 0; k < N; ++k) returns(s, k) = mu(k) + beta(k) * f + noise(rng);
  }
  return portfolio_from_returns(
      returns, alpha, gamma, target, cap,
      "portfolio-n" + std::to_string(n) + "-S" + std::to_string(S) + "-seed" +
          std::to_string(seed));
}

}  // namespace

Family parse_family(const std::string& name) {
  if (name == "norm") return Family::kNorm;
  if (name == "transport") return Family::kTransport;
  if (name == "portfolio") return Family::kPortfolio;
  throw Error(ErrorCode::kInvalidArgument, "unknown family '" + name + "'");
}

const char* to_string(Family family) {
  switch (family) {
    case Family::kNorm:
      return "norm";
    case Family::kTransport:
      return "transport";
    case Family::kPortfolio:
      return "portfolio";
  }
  return "unknown";
}

ProblemInstance generate_instance(Family family, const FamilyParams& params,
                                  std::uint64_t seed) {
  switch (family) {
    case Family::kNorm:
      return generate_norm(params, seed);
    case Family::kTransport:
      return generate_transport(params, seed);
    case Family::kPortfolio:
      return generate_portfolio(params, seed);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown family");
}

ProblemInstance portfolio_from_returns(const MatrixXd& returns, double alpha,
                                       double gamma, double target, double cap,
                                       const std::string& name) {
  const Eigen::Index S = returns.rows();
  const Eigen::Index n = returns.cols();
  if (S < 1 || n < 1) {
    throw Error(ErrorCode::kInvalidArgument, "portfolio: empty returns matrix");
  }
  if (!(cap > 0.0) || cap * static_cast<double>(n) <= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "portfolio: cap * n must exceed 1");
  }
  if (!(gamma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "portfolio: gamma < 0");
  const VectorXd mean = returns.colwise().mean().transpose();
  const MatrixXd centered = returns.rowwise() - mean.transpose();
  MatrixXd cov = S > 1 ? MatrixXd((centered.transpose() * centered) / static_cast<double>(S - 1))
                       : MatrixXd::Zero(n, n);
  cov = 0.5 * (cov + cov.transpose());

  ProblemInstance inst;
  inst.name = name;
  inst.objective.Q = gamma * cov;
  inst.objective.c = -mean;
  inst.region.A = MatrixXd::Zero(0, n);
  inst.region.b = VectorXd::Zero(0);
  inst.region.E = MatrixXd::Ones(1, n);
  inst.region.e = VectorXd::Ones(1);
  inst.region.lower = VectorXd::Zero(n);
  inst.region.upper = VectorXd::Constant(n, std::min(cap, 1.0));
  inst.scenarios.S = static_cast<std::size_t>(S);
  inst.scenarios.I = 1;
  for (Eigen::Index s = 0; s < S; ++s) {
    inst.scenarios.pieces.push_back(
        ConstraintPiece::affine(-returns.row(s).transpose(), target));
  }
  inst.risk = RiskSpec(alpha, static_cast<std::size_t>(S));
  return inst;
}

}  // namespace ccp
