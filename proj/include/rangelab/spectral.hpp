#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rangelab/lattice.hpp"
#include "rangelab/rng.hpp"

namespace rangelab {

/// sin(k*pi*l/N) for 1 <= k,l <= N-1, evaluated in long double and stored
/// once; both the table builder and the pointwise series read from here.
class SineTable {
 public:
  explicit SineTable(int n, double perturbation = 0.0);

  int n() const { return n_; }
  double at(int k, int l) const { return s_(k - 1, l - 1); }
  const Eigen::MatrixXd& matrix() const { return s_; }

 private:
  int n_;
  Eigen::MatrixXd s_;
};

/// Eigenvalue denominator 1 - (cos(n*pi/N) + cos(m*pi/N))/2 of the discrete
/// Laplacian on the cube (0,N)^2; strictly positive for 1 <= m,n <= N-1.
double cube_eigenvalue(int n_scale, int n, int m);

/// Conductances g_N(x) on every interior point of the cube (0,N)^2.
///
/// g is the reciprocal of the positive sine-square series; the full table is
/// assembled as two dense matrix products over the spectral factorization,
/// and matches the pointwise evaluator to solver precision.
struct SpectralField {
  int n = 0;
  Eigen::MatrixXd g;  // g(x1-1, x2-1), interior indices 1..N-1

  double at(std::int64_t x1, std::int64_t x2) const {
    return g(static_cast<Eigen::Index>(x1 - 1), static_cast<Eigen::Index>(x2 - 1));
  }
};

SpectralField conductance_table(int n_scale);

/// Pointwise g_N(x) via the series, accumulated row-by-row in long double.
/// dim = 2 is the cube formula; dim = 3 extends it coordinate-wise
/// (product of three sine-square factors, lambda = 1 - (1/3) sum cos).
double conductance_at(int n_scale, const IVec& x, int dim = 2,
                      const SineTable* table = nullptr);

/// Hitting probability P^(N)_b(x) via the explicit sine series (compensated
/// summation; signed terms).  b = x returns 1 by the boundary condition.
double hitting_probability(int n_scale, const IVec& b, const IVec& x, int dim = 2,
                           const SineTable* table = nullptr);

/// Hitting table on an arbitrary lattice domain from the first-step linear
/// system: P harmonic off x, P(x) = 1, P = 0 outside D_N, plus the
/// conductance g_N(x) = 1 - mean of P over the neighbours of x.
struct HittingTable {
  IVec target{0, 0, 0};
  double g = 0;
  std::vector<IVec> sites;    // interior points, lexicographic
  Eigen::VectorXd values;     // P at sites
  double solve_residual = 0;  // relative residual of the linear solve

  /// P at any lattice point (0 outside the interior).
  double value_at(const IVec& p) const;

 private:
  friend HittingTable exact_hitting_solve(const LatticeDomain&, const IVec&);
  std::vector<std::uint64_t> keys_;  // packed `sites`, sorted
};

/// Direct sparse solve of the first-step system.  Works on any shape and
/// dimension 1..3; throws ValidationError above ~1e5 unknowns.
HittingTable exact_hitting_solve(const LatticeDomain& dom, const IVec& x);

/// Local conductance: escape probability from the centered box of width w
/// before returning to the center, via the same series at scale w.  Odd
/// widths are realized with floor(w/2) on each side of the center.
double local_conductance(int width);

/// Monte Carlo check of Q^(N)_b(x) <= g_N(x) P^(N)_b(x) where Q is the
/// probability of exactly p visits to x before exit from the cube (0,N)^2.
struct BoundCheckReport {
  int n = 0;
  IVec b{0, 0, 0}, x{0, 0, 0};
  int p = 0;
  std::uint64_t replicates = 0;
  double q_hat = 0;
  double q_se = 0;
  double g = 0;
  double hitting = 0;
  double bound = 0;      // g * P
  bool within = false;   // q_hat <= bound + 4 se
  std::string summary() const;
};

BoundCheckReport multirange_bound_check(int n_scale, const IVec& b, const IVec& x,
                                        int p, std::uint64_t replicates,
                                        const SeedPolicy& seeds, int workers = 1);

/// Binary cache of a conductance table, keyed by (N, shape hash), explicit
/// little-endian 64-bit float payload.
void write_conductance_cache(const std::string& path, const SpectralField& field,
                             std::uint64_t shape_hash);
SpectralField read_conductance_cache(const std::string& path,
                                     std::uint64_t expect_shape_hash);

}  // namespace rangelab
