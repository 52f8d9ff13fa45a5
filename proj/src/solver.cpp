#include "cqm/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <random>

#include "cqm/errors.hpp"

namespace cqm {

namespace {

constexpr Complex I{0.0, 1.0};
using SparseCol = Eigen::SparseMatrix<Complex, Eigen::ColMajor>;

SparseCol scaled_diagonal_product(const Vec& left, const SparseC& m, const Vec& right) {
  SparseCol out = m;
  for (int col = 0; col < out.outerSize(); ++col)
    for (SparseCol::InnerIterator it(out, col); it; ++it) it.valueRef() *= left[it.row()] * right[it.col()];
  return out;
}

// W^{-1/2} M W^{-1/2} at time t, with W at the same time.
struct SymmetrisedHamiltonian {
  SparseCol h;
  Vec w;
};

SymmetrisedHamiltonian symmetrised(const SpecialQuadratic& f, const GeometryBundle& b, double k, int order, double t) {
  const auto op = quantum_operator(f, b, k, {order, t});
  const Vec s = op.weights().cwiseSqrt().cwiseInverse();
  return {scaled_diagonal_product(s, op.weighted(), s), op.weights()};
}

bool is_static(const GeometryBundle& b, const Grid& grid, double t0, double t1) {
  const std::vector<double> times{t0, 0.5 * (t0 + t1), t1, t0 + 0.37 * (t1 - t0)};
  for (std::ptrdiff_t k = 0; k < grid.size(); ++k) {
    const Vec x = grid.point(k);
    const Mat g0 = b.metric(t0, x);
    const Vec a0 = b.potential(t0, x);
    for (double t : times) {
      if ((b.metric(t, x) - g0).cwiseAbs().maxCoeff() > 0.0) return false;
      if ((b.potential(t, x) - a0).cwiseAbs().maxCoeff() > 0.0) return false;
    }
  }
  return true;
}

SparseCol identity(std::ptrdiff_t n) {
  SparseCol id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace

Complex inner_product(const WaveFunction& a, const WaveFunction& b, const GeometryBundle& bundle) {
  if (!a.grid.same_as(b.grid) || a.values.size() != b.values.size())
    throw StructuralError("inner_product: wavefunctions live on different grids");
  if (a.t != b.t) throw StructuralError("inner_product: wavefunctions live on different time slices");
  const Vec w = node_density(bundle, a.grid, a.t);
  return (a.values.conjugate().cwiseProduct(b.values).cwiseProduct(w.cast<Complex>())).sum() * a.grid.cell_volume();
}

double norm(const WaveFunction& psi, const GeometryBundle& bundle) {
  return std::sqrt(std::real(inner_product(psi, psi, bundle)));
}

double boundary_mass(const WaveFunction& psi, const GeometryBundle& bundle, int cells) {
  const Vec w = node_density(bundle, psi.grid, psi.t);
  double rim = 0.0, total = 0.0;
  for (std::ptrdiff_t k = 0; k < psi.grid.size(); ++k) {
    const double m = w[k] * std::norm(psi.values[k]);
    total += m;
    if (psi.grid.wall_distance(k) <= cells) rim += m;
  }
  return total > 0.0 ? rim / total : 0.0;
}

void EvolutionConfig::check() const {
  if (steps < 1) throw DomainError("evolution needs at least one step");
  if (!(t_end > t_start)) throw DomainError("evolution needs t_end > t_start");
}

WaveFunction evolve(const WaveFunction& psi0, const GeometryBundle& bundle, double k, const EvolutionConfig& cfg) {
  cfg.check();
  psi0.check_finite();
  const Grid& grid = psi0.grid;
  if (!grid.same_as(Grid(bundle.chart))) throw StructuralError("evolve: wavefunction grid differs from the chart");
  const auto h0 = builtin::hamiltonian(bundle);
  const double dt = (cfg.t_end - cfg.t_start) / cfg.steps;
  const bool fixed = is_static(bundle, grid, cfg.t_start, cfg.t_end);
  const SparseCol id = identity(grid.size());

  Eigen::SparseLU<SparseCol> lu;
  SparseCol rhs_op;
  Vec w_now = node_density(bundle, grid, cfg.t_start);
  const auto build = [&](double t_mid) {
    const auto sh = symmetrised(h0, bundle, k, cfg.order, t_mid);
    const SparseCol a = id + Complex(0.0, 0.5 * dt) * sh.h;
    rhs_op = id - Complex(0.0, 0.5 * dt) * sh.h;
    lu.compute(a);
    return lu.info() == Eigen::Success;
  };

  CVec u = psi0.values.cwiseProduct(w_now.cwiseSqrt().cast<Complex>());
  WaveFunction out{grid, cfg.t_start, psi0.values};
  if (cfg.observer) cfg.observer(0, out);
  if (fixed && !build(cfg.t_start)) throw NumericalError("Crank-Nicolson factorisation failed", 0);
  for (int step = 1; step <= cfg.steps; ++step) {
    const double t0 = cfg.t_start + (step - 1) * dt;
    if (!fixed && !build(t0 + 0.5 * dt)) throw NumericalError("Crank-Nicolson factorisation failed", step);
    u = lu.solve(CVec(rhs_op * u));
    if (lu.info() != Eigen::Success) throw NumericalError("Crank-Nicolson solve failed", step);
    out.t = cfg.t_start + step * dt;
    if (!fixed) w_now = node_density(bundle, grid, out.t);
    out.values = u.cwiseQuotient(w_now.cwiseSqrt().cast<Complex>());
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (!std::isfinite(u[i].real()) || !std::isfinite(u[i].imag()))
        throw NumericalError("non-finite values during evolution", step);
    if (cfg.observer) cfg.observer(step, out);
  }
  return out;
}

double expectation(const QuantumOperator& op, const WaveFunction& psi, const GeometryBundle& bundle,
                   double* imag_part) {
  const double nn = std::real(inner_product(psi, psi, bundle));
  if (std::abs(nn - 1.0) > 1e-6)
    throw NormalizationError("expectation needs a normalised state (norm^2 = " + std::to_string(nn) + ")");
  const Complex e = inner_product(psi, op.apply(psi), bundle);
  if (imag_part) *imag_part = e.imag();
  return e.real();
}

std::vector<int> SpectrumResult::multiplicities(double tol) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (i > 0 && eigenvalues[i] - eigenvalues[i - 1] <= tol * (1.0 + std::abs(eigenvalues[i])))
      ++out.back();
    else
      out.push_back(1);
  }
  return out;
}

namespace {

struct RitzPair {
  double value;
  CVec vector;
  double residual;
};

class ShiftInvertLanczos {
 public:
  ShiftInvertLanczos(const SparseCol& h, double sigma) : h_(h), sigma_(sigma) {
    lu_.compute(h - Complex(sigma) * identity(h.rows()));
    if (lu_.info() != Eigen::Success) throw NumericalError("shift-invert factorisation failed", 0);
  }

  double sigma() const { return sigma_; }

  std::vector<RitzPair> pass(const std::vector<RitzPair>& locked, CVec start, int steps) const {
    const auto n = h_.rows();
    steps = static_cast<int>(std::min<std::ptrdiff_t>(steps, n - static_cast<std::ptrdiff_t>(locked.size())));
    if (steps < 1) return {};
    const auto deflate = [&](CVec& v) {
      for (int rep = 0; rep < 2; ++rep)
        for (const auto& l : locked) v -= l.vector * l.vector.dot(v);
    };
    deflate(start);
    std::vector<CVec> basis;
    std::vector<double> alpha, beta;
    CVec v = start / start.norm();
    for (int j = 0; j < steps; ++j) {
      basis.push_back(v);
      CVec w = lu_.solve(v);
      deflate(w);
      alpha.push_back(std::real(v.dot(w)));
      for (int rep = 0; rep < 2; ++rep)
        for (const auto& b : basis) w -= b * b.dot(w);
      const double bnorm = w.norm();
      if (j + 1 == steps || bnorm < 1e-13 * std::abs(alpha.back())) break;
      beta.push_back(bnorm);
      v = w / bnorm;
    }
    const auto m = static_cast<Eigen::Index>(alpha.size());
    Mat t = Mat::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(t);
    std::vector<RitzPair> out;
    for (Eigen::Index c = 0; c < m; ++c) {
      const double theta = es.eigenvalues()[c];
      if (std::abs(theta) < 1e-300) continue;
      CVec y = CVec::Zero(n);
      for (Eigen::Index i = 0; i < m; ++i) y += es.eigenvectors()(i, c) * basis[static_cast<std::size_t>(i)];
      y /= y.norm();
      const double e = std::real(y.dot(h_ * y));
      out.push_back({e, y, (h_ * y - e * y).norm()});
    }
    std::sort(out.begin(), out.end(), [](const RitzPair& a, const RitzPair& b) { return a.value < b.value; });
    return out;
  }

 private:
  const SparseCol& h_;
  double sigma_;
  Eigen::SparseLU<SparseCol> lu_;
};

double gershgorin_lower(const SparseCol& h) {
  Vec diag = Vec::Zero(h.rows()), off = Vec::Zero(h.rows());
  for (int col = 0; col < h.outerSize(); ++col)
    for (SparseCol::InnerIterator it(h, col); it; ++it) {
      if (it.row() == it.col())
        diag[it.row()] = it.value().real();
      else
        off[it.row()] += std::abs(it.value());
    }
  return (diag - off).minCoeff();
}

}  // namespace

SpectrumResult spectrum(const SpecialQuadratic& f, const GeometryBundle& bundle, double k, int n_modes,
                        const SpectrumOptions& opts) {
  if (n_modes < 1) throw DomainError("spectrum: n_modes must be positive");
  const Grid grid(bundle.chart);
  if (n_modes > grid.size()) throw DomainError("spectrum: more modes than grid nodes");
  const auto sh = symmetrised(f, bundle, k, opts.order, opts.t);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd;
  const auto random_start = [&] {
    CVec v(grid.size());
    for (auto& c : v) c = Complex(nd(rng), nd(rng));
    return v;
  };
  const auto converged = [&](const RitzPair& p) { return p.residual <= opts.tolerance * (1.0 + std::abs(p.value)); };

  const double gl = gershgorin_lower(sh.h);
  auto solver = std::make_unique<ShiftInvertLanczos>(sh.h, gl - 1e-3 * (1.0 + std::abs(gl)));
  std::vector<RitzPair> locked;
  double best_unconverged = 0.0;
  bool done = false;
  for (int pass = 0; pass < opts.max_passes && !done; ++pass) {
    auto ritz = solver->pass(locked, random_start(), opts.lanczos_steps);
    if (ritz.empty()) break;
    // Move the shift up to just below the lowest estimate once one exists.
    if (pass == 0 && ritz.size() > 1) {
      const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(n_modes), ritz.size() - 1);
      const double spread = std::max(ritz[top].value - ritz[0].value, 1e-6 * (1.0 + std::abs(ritz[0].value)));
      const double sigma = ritz[0].value - 0.5 * spread;
      if (sigma > solver->sigma()) {
        solver = std::make_unique<ShiftInvertLanczos>(sh.h, sigma);
        ritz = solver->pass(locked, random_start(), opts.lanczos_steps);
      }
    }
    std::vector<double> known;
    for (const auto& l : locked) known.push_back(l.value);
    std::sort(known.begin(), known.end());
    if (static_cast<int>(known.size()) >= n_modes && converged(ritz[0]) &&
        ritz[0].value > known[static_cast<std::size_t>(n_modes - 1)] +
                            opts.cluster_tol * (1.0 + std::abs(known[static_cast<std::size_t>(n_modes - 1)]))) {
      done = true;
      break;
    }
    bool any = false;
    for (auto& p : ritz) {
      if (!converged(p)) {
        best_unconverged = std::max(best_unconverged, p.residual);
        continue;
      }
      for (int rep = 0; rep < 2; ++rep)
        for (const auto& l : locked) p.vector -= l.vector * l.vector.dot(p.vector);
      p.vector /= p.vector.norm();
      locked.push_back(std::move(p));
      any = true;
    }
    if (!any && pass + 1 == opts.max_passes) break;
  }
  std::sort(locked.begin(), locked.end(), [](const RitzPair& a, const RitzPair& b) { return a.value < b.value; });
  if (!done || static_cast<int>(locked.size()) < n_modes)
    throw ConvergenceError("spectrum: eigenpairs did not converge", locked.size() >= static_cast<std::size_t>(n_modes)
                                                                        ? 0.0
                                                                        : best_unconverged);

  SpectrumResult res;
  const Vec s = sh.w.cwiseSqrt().cwiseInverse();
  const double scale = 1.0 / std::sqrt(grid.cell_volume());
  for (int i = 0; i < n_modes; ++i) {
    const auto& p = locked[static_cast<std::size_t>(i)];
    res.eigenvalues.push_back(p.value);
    res.residuals.push_back(p.residual);
    res.eigenstates.push_back({grid, opts.t, p.vector.cwiseProduct(s.cast<Complex>()) * scale});
  }
  return res;
}

void write_slice(const std::filesystem::path& path, const WaveFunction& psi) {
  static_assert(std::endian::native == std::endian::little, "slice dumps assume a little-endian host");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing", "slice");
  const std::int32_t n = psi.grid.dim();
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (int a = 0; a < n; ++a) {
    const std::int32_t p = psi.grid.points(a);
    os.write(reinterpret_cast<const char*>(&p), sizeof p);
  }
  for (const Complex& c : psi.values) {
    const double pair[2] = {c.real(), c.imag()};
    os.write(reinterpret_cast<const char*>(pair), sizeof pair);
  }
}

CVec read_slice(const std::filesystem::path& path, std::vector<int>* dims) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string(), "slice");
  std::int32_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  if (n < 1 || n > 3) throw ConfigError("bad slice header", path.string());
  std::vector<int> d;
  std::ptrdiff_t size = 1;
  for (int a = 0; a < n; ++a) {
    std::int32_t p = 0;
    is.read(reinterpret_cast<char*>(&p), sizeof p);
    d.push_back(p);
    size *= p;
  }
  CVec out(size);
  for (auto& c : out) {
    double pair[2];
    is.read(reinterpret_cast<char*>(pair), sizeof pair);
    c = Complex(pair[0], pair[1]);
  }
  if (!is) throw ConfigError("truncated slice file", path.string());
  if (dims) *dims = d;
  return out;
}

}  // namespace cqm
