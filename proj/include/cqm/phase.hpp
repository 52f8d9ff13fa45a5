#pragma once

#include <vector>

#include "cqm/geometry.hpp"

namespace cqm {

/// A point of the jet space J1E in chart coordinates (x^0, x^i; x^i_0).
struct PhasePoint {
  double t = 0.0;
  Vec x;
  Vec v;
};

using PhaseFunction = std::function<double(const PhasePoint&)>;

/// Component matrix of Omega in the ordered basis (dx^0, dx^i, dx^i_0).
class CosymplecticForm {
 public:
  using Evaluator = std::function<Mat(const PhasePoint&)>;
  CosymplecticForm(int n, Evaluator eval) : n_(n), eval_(std::move(eval)) {}

  int dim() const { return n_; }
  Mat operator()(const PhasePoint& p) const { return eval_(p); }

 private:
  int n_;
  Evaluator eval_;
};

/// Omega = G_ij (dx^i_0 - (K_l^i_0 + K_l^i_h x^h_0) dx^l) ^ (dx^j - x^j_0 dx^0).
CosymplecticForm build_omega(const GeometryBundle& bundle);
/// The same components from pointwise values of G and K.
Mat omega_components(const Mat& g, const Connection& k, const Vec& v);

/// Rank of an antisymmetric component matrix, singular values below
/// rel_tol * sigma_max counted as zero.
int form_rank(const Mat& omega, double rel_tol = 1e-10);

/// Max |dOmega| over the given points, by central differences in (t, x, v).
double omega_closure_residual(const CosymplecticForm& omega, const std::vector<PhasePoint>& points,
                              double fd_step = 1e-3);

/// Acceleration field of the unique second-order connection with i_gamma Omega = 0:
/// gamma^h = K_0^h_0 + 2 K_0^h_j v^j + K_i^h_j v^i v^j.
class SecondOrderConnection {
 public:
  using Accel = std::function<Vec(const PhasePoint&)>;
  SecondOrderConnection(int n, Accel accel) : n_(n), accel_(std::move(accel)) {}

  int dim() const { return n_; }
  Vec operator()(const PhasePoint& p) const { return accel_(p); }
  /// The full vector (1, v, gamma) on J1E.
  Vec vector_at(const PhasePoint& p) const;

 private:
  int n_;
  Accel accel_;
};

SecondOrderConnection build_gamma(const GeometryBundle& bundle);
/// Acceleration from a connection value, the closed form above.
Vec second_order_acceleration(const Connection& k, const Vec& v);

/// max |i_gamma Omega| at a point.
double contraction_residual(const CosymplecticForm& omega, const SecondOrderConnection& gamma,
                            const PhasePoint& p);

using Trajectory = std::vector<PhasePoint>;

/// RK4 for x' = v, v' = gamma(t, x, v). Throws BoundaryError when the
/// motion leaves the chart box.
Trajectory integrate_newton(const SecondOrderConnection& gamma, const FibredChart& chart,
                            const PhasePoint& start, double t_end, int steps);

/// max_k |G (a_k - gamma_k)| along a trajectory, with a_k from central
/// differences of the velocities; the Euler-Lagrange operator evaluated on
/// the discrete motion.
double euler_lagrange_residual(const GeometryBundle& bundle, const SecondOrderConnection& gamma,
                               const Trajectory& traj);

struct PoincareCartanSplit {
  PhaseFunction lagrangian;                       // L_0
  PhaseFunction hamiltonian;                      // H_0 observed
  std::function<Vec(const PhasePoint&)> momentum;  // P_i observed
};

PoincareCartanSplit poincare_cartan_split(const GeometryBundle& bundle);

/// Vertical Hamiltonian lift of a differential df (2n+1 entries): the vector
/// with zero time component whose contraction with Omega matches df on
/// vertical directions. Throws DegeneracyError if Omega has rank below 2n.
Vec hamiltonian_lift(const Vec& df, const Mat& omega);
/// {f, g} = dg(H[f]) from differentials.
double poisson_from_differentials(const Vec& df, const Vec& dg, const Mat& omega);
/// Poisson bracket of two phase functions, differentials by finite differences.
double poisson_bracket(const PhaseFunction& f, const PhaseFunction& g, const CosymplecticForm& omega,
                       const PhasePoint& at, double fd_step = 1e-4);

/// Gradient of a phase function in the (t, x, v) ordering.
Vec phase_gradient(const PhaseFunction& f, const PhasePoint& p, double fd_step = 1e-4);

}  // namespace cqm
