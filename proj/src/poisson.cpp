#include "rangelab/poisson.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>

#include "rangelab/errors.hpp"

namespace rangelab {

namespace {

constexpr double kResidualContract = 1e-10;

}  // namespace

double MomentField::dense_at(int k, std::int64_t i, std::int64_t j,
                             std::int64_t l) const {
  if (i < 0 || i >= grid_ext_[0] || j < 0 || j >= grid_ext_[1] || l < 0 ||
      l >= grid_ext_[2])
    return 0.0;
  const std::size_t flat = static_cast<std::size_t>(
      (l * grid_ext_[1] + j) * grid_ext_[0] + i);
  const std::int64_t idx = index_[flat];
  return idx < 0 ? 0.0 : levels_[static_cast<std::size_t>(k - 1)][idx];
}

double MomentField::node_value(int k, const IVec& node) const {
  if (k < 1 || k > levels()) throw ValidationError("node_value: bad level");
  return dense_at(k, node[0] - grid_lo_[0], node[1] - grid_lo_[1],
                  node[2] - grid_lo_[2]);
}

double MomentField::value_at(const Eigen::Vector3d& a, int k) const {
  if (k < 1 || k > levels()) throw ValidationError("value_at: bad level");
  if (!domain_.contains(a))
    throw ValidationError("value_at: point not inside D");
  const int d = domain_.dim();
  double w[3][2];
  std::int64_t base[3] = {0, 0, 0};
  for (int ax = 0; ax < 3; ++ax) {
    if (ax >= d) {
      base[ax] = 0;
      w[ax][0] = 1.0;
      w[ax][1] = 0.0;
      continue;
    }
    const double g = a[ax] / h_ - static_cast<double>(grid_lo_[ax]);
    const double f = std::floor(g);
    base[ax] = static_cast<std::int64_t>(f);
    w[ax][1] = g - f;
    w[ax][0] = 1.0 - w[ax][1];
  }
  double out = 0;
  for (int dx = 0; dx < 2; ++dx)
    for (int dy = 0; dy < (d >= 2 ? 2 : 1); ++dy)
      for (int dz = 0; dz < (d >= 3 ? 2 : 1); ++dz)
        out += w[0][dx] * w[1][dy] * w[2][dz] *
               dense_at(k, base[0] + dx, base[1] + dy, base[2] + dz);
  return out;
}

double MomentField::hierarchy_residual(int k) const {
  if (k < 1 || k + 1 > levels())
    throw ValidationError("hierarchy_residual: need levels k and k+1");
  const auto& uk = levels_[static_cast<std::size_t>(k - 1)];
  const auto& un = levels_[static_cast<std::size_t>(k)];
  const int d = domain_.dim();
  double worst = 0;
  for (std::size_t s = 0; s < sites_.size(); ++s) {
    const IVec& node = sites_[s];
    double lap = -2.0 * d * un[static_cast<std::int64_t>(s)];
    bool regular = true;
    for (int ax = 0; ax < d && regular; ++ax) {
      for (int dir : {-1, 1}) {
        const std::int64_t i = node[0] - grid_lo_[0] + (ax == 0 ? dir : 0);
        const std::int64_t j = node[1] - grid_lo_[1] + (ax == 1 ? dir : 0);
        const std::int64_t l = node[2] - grid_lo_[2] + (ax == 2 ? dir : 0);
        const std::size_t flat = static_cast<std::size_t>(
            (l * grid_ext_[1] + j) * grid_ext_[0] + i);
        if (i < 0 || i >= grid_ext_[0] || j < 0 || j >= grid_ext_[1] || l < 0 ||
            l >= grid_ext_[2] || index_[flat] < 0) {
          regular = false;  // boundary-cut stencil: recursion holds in the
          break;            // fitted sense, skip for the plain-stencil check
        }
        lap += levels_[static_cast<std::size_t>(k)][index_[flat]];
      }
    }
    if (!regular) continue;
    const double res =
        lap / (h_ * h_) + 2.0 * (k + 1) * uk[static_cast<std::int64_t>(s)];
    worst = std::max(worst, std::abs(res));
  }
  double scale = 0;
  for (Eigen::Index i = 0; i < uk.size(); ++i) scale = std::max(scale, std::abs(uk[i]));
  return scale > 0 ? worst / scale : worst;
}

MomentField solve_hierarchy(const DomainSpec& domain, double h, int levels) {
  if (levels < 1) throw ValidationError("solve_hierarchy: K must be >= 1");
  if (!(h > 0)) throw ValidationError("solve_hierarchy: h must be positive");
  Eigen::Vector3d lo, hi;
  domain.bounding_box(lo, hi);
  const int d = domain.dim();
  for (int ax = 0; ax < d; ++ax)
    if ((hi[ax] - lo[ax]) / h < 16)
      throw ValidationError("solve_hierarchy: grid must resolve D (>= 16 nodes across)");

  MomentField field;
  field.domain_ = domain;
  field.h_ = h;
  for (int ax = 0; ax < 3; ++ax) {
    if (ax >= d) {
      field.grid_lo_[ax] = 0;
      field.grid_ext_[ax] = 1;
      continue;
    }
    field.grid_lo_[ax] = static_cast<std::int64_t>(std::floor(lo[ax] / h)) - 1;
    const auto hi_idx = static_cast<std::int64_t>(std::ceil(hi[ax] / h)) + 1;
    field.grid_ext_[ax] = hi_idx - field.grid_lo_[ax] + 1;
  }
  const std::size_t cells = static_cast<std::size_t>(field.grid_ext_[0]) *
                            static_cast<std::size_t>(field.grid_ext_[1]) *
                            static_cast<std::size_t>(field.grid_ext_[2]);
  field.index_.assign(cells, -1);

  // interior nodes
  for (std::int64_t l = 0; l < field.grid_ext_[2]; ++l)
    for (std::int64_t j = 0; j < field.grid_ext_[1]; ++j)
      for (std::int64_t i = 0; i < field.grid_ext_[0]; ++i) {
        Eigen::Vector3d p = Eigen::Vector3d::Zero();
        p[0] = static_cast<double>(field.grid_lo_[0] + i) * h;
        if (d >= 2) p[1] = static_cast<double>(field.grid_lo_[1] + j) * h;
        if (d >= 3) p[2] = static_cast<double>(field.grid_lo_[2] + l) * h;
        if (domain.contains(p)) {
          const std::size_t flat = static_cast<std::size_t>(
              (l * field.grid_ext_[1] + j) * field.grid_ext_[0] + i);
          field.index_[flat] = static_cast<std::int64_t>(field.sites_.size());
          field.sites_.push_back(
              {field.grid_lo_[0] + i, d >= 2 ? field.grid_lo_[1] + j : 0,
               d >= 3 ? field.grid_lo_[2] + l : 0});
        }
      }
  const auto m = static_cast<Eigen::Index>(field.sites_.size());
  if (m == 0) throw ValidationError("solve_hierarchy: empty interior");

  auto flat_index = [&](std::int64_t i, std::int64_t j, std::int64_t l) {
    return field.index_[static_cast<std::size_t>(
        (l * field.grid_ext_[1] + j) * field.grid_ext_[0] + i)];
  };

  // -Laplacian with fitted boundary arms: for an arm cut at fraction t the
  // ghost value is u_P (t-1)/t, adding (1/t - 1)/h^2 to the diagonal beyond
  // the regular 2d/h^2; off-diagonal couplings stay symmetric.
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(m) * (2 * d + 1));
  const double invh2 = 1.0 / (h * h);
  for (Eigen::Index row = 0; row < m; ++row) {
    const IVec& node = field.sites_[static_cast<std::size_t>(row)];
    Eigen::Vector3d p = Eigen::Vector3d::Zero();
    for (int ax = 0; ax < d; ++ax) p[ax] = static_cast<double>(node[ax]) * h;
    double diag = 0;
    for (int ax = 0; ax < d; ++ax) {
      for (int dir : {-1, 1}) {
        const std::int64_t i = node[0] - field.grid_lo_[0] + (ax == 0 ? dir : 0);
        const std::int64_t j =
            d >= 2 ? node[1] - field.grid_lo_[1] + (ax == 1 ? dir : 0) : 0;
        const std::int64_t l =
            d >= 3 ? node[2] - field.grid_lo_[2] + (ax == 2 ? dir : 0) : 0;
        const std::int64_t nb = flat_index(i, j, l);
        if (nb >= 0) {
          trips.emplace_back(row, static_cast<Eigen::Index>(nb), -invh2);
          diag += invh2;
        } else {
          const double t = field.domain_.boundary_arm(p, ax, dir, h);
          diag += invh2 / t;
        }
      }
    }
    trips.emplace_back(row, row, diag);
  }
  Eigen::SparseMatrix<double> a(m, m);
  a.setFromTriplets(trips.begin(), trips.end());

  const bool use_direct = m <= 90000;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> direct;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                           Eigen::Lower | Eigen::Upper>
      cg;
  if (use_direct) {
    direct.compute(a);
    if (direct.info() != Eigen::Success)
      throw SimulationError("solve_hierarchy: factorization failed");
  } else {
    cg.setTolerance(1e-13);
    cg.setMaxIterations(20000);
    cg.compute(a);
  }

  auto solve = [&](const Eigen::VectorXd& rhs) {
    Eigen::VectorXd u =
        use_direct ? direct.solve(rhs).eval() : cg.solve(rhs).eval();
    double rel = (a * u - rhs).norm() / std::max(rhs.norm(), 1e-300);
    for (int refine = 0; refine < 3 && rel > kResidualContract; ++refine) {
      const Eigen::VectorXd resid = rhs - a * u;
      u += use_direct ? direct.solve(resid).eval() : cg.solve(resid).eval();
      rel = (a * u - rhs).norm() / std::max(rhs.norm(), 1e-300);
    }
    if (rel > kResidualContract)
      throw SimulationError(
          "solve_hierarchy: solver stalled at relative residual " +
          std::to_string(rel) +
          (use_direct ? " (direct)" : " (cg iterations " +
                                          std::to_string(cg.iterations()) + ")"));
    return std::make_pair(u, rel);
  };

  Eigen::VectorXd rhs = Eigen::VectorXd::Constant(m, 2.0);
  for (int k = 1; k <= levels; ++k) {
    auto [u, rel] = solve(rhs);
    field.levels_.push_back(u);
    field.residuals_.push_back(rel);
    if (k < levels) rhs = 2.0 * (k + 1) * u;
  }
  return field;
}

double evaluate_at(const MomentField& field, const Eigen::Vector3d& a, int k) {
  return field.value_at(a, k);
}

double limit_constant_base(int dim, Statistic stat, int p, double p0,
                           Convention conv) {
  if (dim < 2) throw ValidationError("limit_constant_base: d must be >= 2");
  const double pi = M_PI;
  if (stat == Statistic::Range) {
    if (dim == 2) return pi;  // both conventions agree in d = 2
    if (!(p0 > 0 && p0 < 1))
      throw ValidationError("limit_constant_base: p0 in (0,1) required for d >= 3");
    const double base = (1.0 - p0) * dim;
    return conv == Convention::AsStated ? base / 2.0 : base;
  }
  if (p < 1) throw ValidationError("limit_constant_base: multirange needs p >= 1");
  if (dim == 2)
    return conv == Convention::AsStated ? 2.0 * pi * pi : pi * pi / 2.0;
  if (!(p0 > 0 && p0 < 1))
    throw ValidationError("limit_constant_base: p0 in (0,1) required for d >= 3");
  const double geo = (1.0 - p0) * (1.0 - p0) * std::pow(p0, p - 1);
  const double base = dim * geo;
  return conv == Convention::AsStated ? base / 2.0 : base;
}

LimitPrediction predict_limit_moments(const MomentField& field,
                                      const Eigen::Vector3d& a, int dim, int k,
                                      Statistic stat, int p, double p0,
                                      Convention conv) {
  if (k < 1 || k > field.levels())
    throw ValidationError("predict_limit_moments: level k not solved");
  LimitPrediction out;
  out.dim = dim;
  out.k = k;
  out.stat = stat;
  if (stat == Statistic::MultiRange) out.p = p;
  out.convention = conv;
  const double base = limit_constant_base(dim, stat, p, p0, conv);
  out.constant = std::pow(base, k);
  out.moment = out.constant * field.value_at(a, k);
  return out;
}

}  // namespace rangelab
