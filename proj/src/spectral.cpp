#include "rangelab/spectral.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <thread>

#include "rangelab/errors.hpp"
#include "rangelab/walk.hpp"

namespace rangelab {

SineTable::SineTable(int n, double perturbation) : n_(n) {
  if (n < 2) throw ValidationError("SineTable: N must be >= 2");
  s_.resize(n - 1, n - 1);
  const long double pi = 3.14159265358979323846264338327950288L;
  for (int k = 1; k < n; ++k)
    for (int l = 1; l < n; ++l)
      s_(k - 1, l - 1) = static_cast<double>(
          sinl(pi * static_cast<long double>(k) * static_cast<long double>(l) /
               static_cast<long double>(n)));
  if (perturbation != 0.0) s_(0, 0) += perturbation;  // fault injection hook
}

double cube_eigenvalue(int n_scale, int n, int m) {
  const long double pi = 3.14159265358979323846264338327950288L;
  return static_cast<double>(
      1.0L - 0.5L * (cosl(pi * n / n_scale) + cosl(pi * m / n_scale)));
}

SpectralField conductance_table(int n_scale) {
  if (n_scale < 2) throw ValidationError("conductance_table: N must be >= 2");
  const int m = n_scale - 1;
  SineTable sines(n_scale);
  // g^{-1}(x1,x2) = (4/N^2) sum_{n,m} sin^2(n pi x1/N) sin^2(m pi x2/N) / lambda_{nm}
  //              = (4/N^2) [Q^T W Q](x1,x2),  Q(n,x) = sin^2(n pi x/N)
  Eigen::MatrixXd q = sines.matrix().cwiseProduct(sines.matrix());
  Eigen::MatrixXd w(m, m);
  for (int n = 1; n <= m; ++n)
    for (int mm = 1; mm <= m; ++mm)
      w(n - 1, mm - 1) = 1.0 / cube_eigenvalue(n_scale, n, mm);
  const double scale = 4.0 / (static_cast<double>(n_scale) * static_cast<double>(n_scale));
  Eigen::MatrixXd ginv = scale * (q.transpose() * (w * q));
  SpectralField field;
  field.n = n_scale;
  field.g = ginv.cwiseInverse();
  return field;
}

namespace {

long double conductance_inverse_2d(int n_scale, std::int64_t x1, std::int64_t x2,
                                   const SineTable& sines) {
  // positive terms; row-by-row accumulation in extended precision
  const auto nn = static_cast<long double>(n_scale) * static_cast<long double>(n_scale);
  long double total = 0;
  for (int mm = 1; mm < n_scale; ++mm) {
    const long double sm = sines.at(mm, static_cast<int>(x2));
    const long double sm2 = sm * sm;
    long double row = 0;
    for (int n = 1; n < n_scale; ++n) {
      const long double sn = sines.at(n, static_cast<int>(x1));
      row += sn * sn / static_cast<long double>(cube_eigenvalue(n_scale, n, mm));
    }
    total += sm2 * row;
  }
  return 4.0L * total / nn;
}

long double conductance_inverse_3d(int n_scale, const IVec& x,
                                   const SineTable& sines) {
  const long double n3 = static_cast<long double>(n_scale) *
                         static_cast<long double>(n_scale) *
                         static_cast<long double>(n_scale);
  const long double pi = 3.14159265358979323846264338327950288L;
  std::vector<long double> cosv(static_cast<std::size_t>(n_scale), 0.0L);
  for (int k = 1; k < n_scale; ++k)
    cosv[static_cast<std::size_t>(k)] = cosl(pi * k / n_scale);
  long double total = 0;
  for (int a = 1; a < n_scale; ++a) {
    const long double sa = sines.at(a, static_cast<int>(x[0]));
    const long double sa2 = sa * sa;
    for (int b = 1; b < n_scale; ++b) {
      const long double sb = sines.at(b, static_cast<int>(x[1]));
      const long double ab = sa2 * sb * sb;
      long double row = 0;
      for (int c = 1; c < n_scale; ++c) {
        const long double sc = sines.at(c, static_cast<int>(x[2]));
        const long double lam =
            1.0L - (cosv[static_cast<std::size_t>(a)] +
                    cosv[static_cast<std::size_t>(b)] +
                    cosv[static_cast<std::size_t>(c)]) /
                       3.0L;
        row += sc * sc / lam;
      }
      total += ab * row;
    }
  }
  return 8.0L * total / n3;  // 2^d with d = 3
}

void check_interior(int n_scale, const IVec& x, int dim, const char* who) {
  for (int i = 0; i < dim; ++i)
    if (x[i] <= 0 || x[i] >= n_scale)
      throw ValidationError(std::string(who) + ": point not interior to the cube");
}

}  // namespace

double conductance_at(int n_scale, const IVec& x, int dim, const SineTable* table) {
  if (n_scale < 2) throw ValidationError("conductance_at: N must be >= 2");
  if (dim != 2 && dim != 3) throw ValidationError("conductance_at: dim must be 2 or 3");
  check_interior(n_scale, x, dim, "conductance_at");
  std::optional<SineTable> local;
  if (!table) local.emplace(n_scale);
  const SineTable& sines = table ? *table : *local;
  const long double inv = dim == 2
                              ? conductance_inverse_2d(n_scale, x[0], x[1], sines)
                              : conductance_inverse_3d(n_scale, x, sines);
  return static_cast<double>(1.0L / inv);
}

double hitting_probability(int n_scale, const IVec& b, const IVec& x, int dim,
                           const SineTable* table) {
  if (n_scale < 2) throw ValidationError("hitting_probability: N must be >= 2");
  if (dim != 2 && dim != 3)
    throw ValidationError("hitting_probability: dim must be 2 or 3");
  check_interior(n_scale, b, dim, "hitting_probability");
  check_interior(n_scale, x, dim, "hitting_probability");
  std::optional<SineTable> local;
  if (!table) local.emplace(n_scale);
  const SineTable& sines = table ? *table : *local;

  if (dim == 2) {
    const long double ginv = conductance_inverse_2d(n_scale, x[0], x[1], sines);
    // signed terms: Neumaier-compensated accumulation in long double
    long double sum = 0, comp = 0;
    for (int mm = 1; mm < n_scale; ++mm) {
      const long double f2 = static_cast<long double>(sines.at(mm, static_cast<int>(x[1]))) *
                             sines.at(mm, static_cast<int>(b[1]));
      long double row = 0;
      for (int n = 1; n < n_scale; ++n) {
        const long double f1 =
            static_cast<long double>(sines.at(n, static_cast<int>(x[0]))) *
            sines.at(n, static_cast<int>(b[0]));
        row += f1 / static_cast<long double>(cube_eigenvalue(n_scale, n, mm));
      }
      const long double term = f2 * row;
      const long double t = sum + term;
      comp += (fabsl(sum) >= fabsl(term)) ? (sum - t) + term : (term - t) + sum;
      sum = t;
    }
    const auto nn = static_cast<long double>(n_scale) * static_cast<long double>(n_scale);
    return static_cast<double>(4.0L * (sum + comp) / (nn * ginv));
  }

  const long double ginv = conductance_inverse_3d(n_scale, x, sines);
  const long double pi = 3.14159265358979323846264338327950288L;
  long double sum = 0;
  for (int a = 1; a < n_scale; ++a) {
    const long double fa = static_cast<long double>(sines.at(a, static_cast<int>(x[0]))) *
                           sines.at(a, static_cast<int>(b[0]));
    for (int bb = 1; bb < n_scale; ++bb) {
      const long double fb =
          static_cast<long double>(sines.at(bb, static_cast<int>(x[1]))) *
          sines.at(bb, static_cast<int>(b[1]));
      long double row = 0;
      for (int c = 1; c < n_scale; ++c) {
        const long double fc =
            static_cast<long double>(sines.at(c, static_cast<int>(x[2]))) *
            sines.at(c, static_cast<int>(b[2]));
        const long double lam =
            1.0L -
            (cosl(pi * a / n_scale) + cosl(pi * bb / n_scale) + cosl(pi * c / n_scale)) /
                3.0L;
        row += fc / lam;
      }
      sum += fa * fb * row;
    }
  }
  const long double n3 = static_cast<long double>(n_scale) *
                         static_cast<long double>(n_scale) *
                         static_cast<long double>(n_scale);
  return static_cast<double>(8.0L * sum / (n3 * ginv));
}

double HittingTable::value_at(const IVec& p) const {
  const std::uint64_t key = pack_point(p);
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return 0.0;
  return values[static_cast<Eigen::Index>(it - keys_.begin())];
}

HittingTable exact_hitting_solve(const LatticeDomain& dom, const IVec& x) {
  if (!dom.contains(x))
    throw ValidationError("exact_hitting_solve: target not in D_N");
  HittingTable table;
  table.target = x;
  table.sites = dom.enumerate_interior();
  const std::size_t n_sites = table.sites.size();
  if (n_sites > 200000)
    throw ValidationError("exact_hitting_solve: domain too large (" +
                          std::to_string(n_sites) + " unknowns)");
  // sites are lexicographically sorted and packing is monotone per axis, but
  // not globally; sort keys with an index map for lookups
  std::vector<std::uint64_t> keys(n_sites);
  for (std::size_t i = 0; i < n_sites; ++i) keys[i] = pack_point(table.sites[i]);
  std::vector<std::size_t> order(n_sites);
  for (std::size_t i = 0; i < n_sites; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<std::uint64_t> sorted_keys(n_sites);
  std::vector<std::uint32_t> sorted_to_site(n_sites);
  for (std::size_t i = 0; i < n_sites; ++i) {
    sorted_keys[i] = keys[order[i]];
    sorted_to_site[i] = static_cast<std::uint32_t>(order[i]);
  }
  auto site_index = [&](const IVec& p) -> std::int64_t {
    const std::uint64_t key = pack_point(p);
    const auto it = std::lower_bound(sorted_keys.begin(), sorted_keys.end(), key);
    if (it == sorted_keys.end() || *it != key) return -1;
    return sorted_to_site[static_cast<std::size_t>(it - sorted_keys.begin())];
  };

  const int d = dom.dim();
  const double inv2d = 1.0 / (2.0 * d);
  const std::int64_t target_site = site_index(x);

  // unknowns: interior sites minus the target (P(x) = 1 is pinned)
  std::vector<std::int64_t> unknown_of_site(n_sites, -1);
  std::vector<std::uint32_t> site_of_unknown;
  site_of_unknown.reserve(n_sites - 1);
  for (std::size_t i = 0; i < n_sites; ++i) {
    if (static_cast<std::int64_t>(i) == target_site) continue;
    unknown_of_site[i] = static_cast<std::int64_t>(site_of_unknown.size());
    site_of_unknown.push_back(static_cast<std::uint32_t>(i));
  }
  const auto m = static_cast<Eigen::Index>(site_of_unknown.size());

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(m) * (2 * d + 1));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (Eigen::Index row = 0; row < m; ++row) {
    const IVec& p = table.sites[site_of_unknown[static_cast<std::size_t>(row)]];
    trips.emplace_back(row, row, 1.0);
    for (int axis = 0; axis < d; ++axis) {
      for (int dir : {-1, 1}) {
        IVec q = p;
        q[axis] += dir;
        const std::int64_t si = site_index(q);
        if (si < 0) continue;  // exterior: P = 0
        if (si == target_site) {
          rhs[row] += inv2d;  // known P(x) = 1
        } else {
          trips.emplace_back(row, static_cast<Eigen::Index>(unknown_of_site[
                                      static_cast<std::size_t>(si)]),
                             -inv2d);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> a(m, m);
  a.setFromTriplets(trips.begin(), trips.end());

  Eigen::VectorXd sol;
  if (m > 0) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
    if (solver.info() != Eigen::Success)
      throw SimulationError("exact_hitting_solve: factorization failed");
    sol = solver.solve(rhs);
    double rel = (a * sol - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (rel > 1e-12) {
      // one step of iterative refinement
      const Eigen::VectorXd corr = solver.solve(rhs - a * sol);
      sol += corr;
      rel = (a * sol - rhs).norm() / std::max(rhs.norm(), 1e-300);
    }
    table.solve_residual = rel;
    if (rel > 1e-12)
      throw SimulationError("exact_hitting_solve: residual " + std::to_string(rel) +
                            " above contract 1e-12");
  }

  table.values.resize(static_cast<Eigen::Index>(n_sites));
  for (std::size_t i = 0; i < n_sites; ++i) {
    if (static_cast<std::int64_t>(i) == target_site)
      table.values[static_cast<Eigen::Index>(i)] = 1.0;
    else
      table.values[static_cast<Eigen::Index>(i)] =
          sol[unknown_of_site[i]];
  }

  // reorder payload to sorted-key order for value_at lookups
  Eigen::VectorXd sorted_vals(static_cast<Eigen::Index>(n_sites));
  std::vector<IVec> sorted_sites(n_sites);
  for (std::size_t i = 0; i < n_sites; ++i) {
    sorted_vals[static_cast<Eigen::Index>(i)] =
        table.values[static_cast<Eigen::Index>(sorted_to_site[i])];
    sorted_sites[i] = table.sites[sorted_to_site[i]];
  }
  table.keys_ = std::move(sorted_keys);
  table.values = std::move(sorted_vals);
  table.sites = std::move(sorted_sites);

  // g_N(x) = 1 - (1/2d) sum over neighbours of P
  double nb = 0;
  for (int axis = 0; axis < d; ++axis)
    for (int dir : {-1, 1}) {
      IVec q = x;
      q[axis] += dir;
      nb += table.value_at(q);
    }
  table.g = 1.0 - inv2d * nb;
  return table;
}

double local_conductance(int width) {
  if (width < 2) throw ValidationError("local_conductance: width must be >= 2");
  // odd widths: floor(w/2) on each side of the center, i.e. the even box w-1
  const int w = (width / 2) * 2;
  if (w == 2) return 1.0;
  const std::int64_t c = w / 2;
  return conductance_at(w, ivec(c, c), 2);
}

std::string BoundCheckReport::summary() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "N=%d b=(%lld,%lld) x=(%lld,%lld) p=%d: Q=%.6g (se %.2g) vs g*P=%.6g -> %s",
                n, static_cast<long long>(b[0]), static_cast<long long>(b[1]),
                static_cast<long long>(x[0]), static_cast<long long>(x[1]), p,
                q_hat, q_se, bound, within ? "within" : "VIOLATED");
  return buf;
}

BoundCheckReport multirange_bound_check(int n_scale, const IVec& b, const IVec& x,
                                        int p, std::uint64_t replicates,
                                        const SeedPolicy& seeds, int workers) {
  check_interior(n_scale, b, 2, "multirange_bound_check");
  check_interior(n_scale, x, 2, "multirange_bound_check");
  if (p < 1) throw ValidationError("multirange_bound_check: p must be >= 1");
  const LatticeDomain dom(DomainSpec::unit_square(), n_scale);
  const WalkLaw law = WalkLaw::simple(2);
  const std::uint64_t cap = default_step_cap(n_scale);
  const std::uint64_t xkey = pack_point(x);

  workers = std::max(1, workers);
  std::atomic<std::uint64_t> next{0};
  std::vector<std::uint64_t> hits(static_cast<std::size_t>(workers), 0);
  auto body = [&](int w) {
    std::uint64_t local = 0;
    constexpr std::uint64_t kBlock = 512;
    while (true) {
      const std::uint64_t begin = next.fetch_add(kBlock);
      if (begin >= replicates) break;
      const std::uint64_t end = std::min(begin + kBlock, replicates);
      for (std::uint64_t r = begin; r < end; ++r) {
        const VisitHistogram h =
            run_until_exit(law, dom, b, seeds.stream_seed(r), cap);
        if (h.counts.count(xkey) == static_cast<std::uint32_t>(p)) ++local;
      }
    }
    hits[static_cast<std::size_t>(w)] = local;
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& th : pool) th.join();
  }
  std::uint64_t total = 0;
  for (const auto h : hits) total += h;

  BoundCheckReport rep;
  rep.n = n_scale;
  rep.b = b;
  rep.x = x;
  rep.p = p;
  rep.replicates = replicates;
  rep.q_hat = static_cast<double>(total) / static_cast<double>(replicates);
  rep.q_se = std::sqrt(rep.q_hat * (1.0 - rep.q_hat) /
                       static_cast<double>(replicates));
  SineTable sines(n_scale);
  rep.g = conductance_at(n_scale, x, 2, &sines);
  rep.hitting = (b == x) ? 1.0 : hitting_probability(n_scale, b, x, 2, &sines);
  rep.bound = rep.g * rep.hitting;
  rep.within = rep.q_hat <= rep.bound + 4.0 * rep.q_se;
  return rep;
}

namespace {

void put_u64le(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64le(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

constexpr std::uint64_t kCacheMagic = 0x52414E47454C4142ULL;  // "RANGELAB"

}  // namespace

void write_conductance_cache(const std::string& path, const SpectralField& field,
                             std::uint64_t shape_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimulationError("cannot open cache file for writing: " + path);
  put_u64le(out, kCacheMagic);
  put_u64le(out, 1);  // layout version
  put_u64le(out, static_cast<std::uint64_t>(field.n));
  put_u64le(out, shape_hash);
  for (Eigen::Index i = 0; i < field.g.rows(); ++i)
    for (Eigen::Index j = 0; j < field.g.cols(); ++j) {
      std::uint64_t bits;
      const double v = field.g(i, j);
      std::memcpy(&bits, &v, 8);
      put_u64le(out, bits);
    }
  if (!out) throw SimulationError("short write on cache file: " + path);
}

SpectralField read_conductance_cache(const std::string& path,
                                     std::uint64_t expect_shape_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SimulationError("cannot open cache file: " + path);
  if (get_u64le(in) != kCacheMagic) throw ValidationError("cache: bad magic");
  if (get_u64le(in) != 1) throw ValidationError("cache: unknown layout version");
  const auto n = static_cast<int>(get_u64le(in));
  const std::uint64_t hash = get_u64le(in);
  if (hash != expect_shape_hash) throw ValidationError("cache: shape hash mismatch");
  SpectralField field;
  field.n = n;
  field.g.resize(n - 1, n - 1);
  for (Eigen::Index i = 0; i < field.g.rows(); ++i)
    for (Eigen::Index j = 0; j < field.g.cols(); ++j) {
      const std::uint64_t bits = get_u64le(in);
      double v;
      std::memcpy(&v, &bits, 8);
      field.g(i, j) = v;
    }
  if (!in) throw ValidationError("cache: truncated payload");
  return field;
}

}  // namespace rangelab
