#pragma once

#include <Eigen/Sparse>

#include "cqm/falg.hpp"

namespace cqm {

using SparseC = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

/// A wavefunction slice psi(t, .) sampled on the interior nodes of a chart
/// grid, in the bundle's fixed trivialization (psi = Psi / b).
struct WaveFunction {
  Grid grid;
  double t = 0.0;
  CVec values;

  static WaveFunction sample(const SpacetimeWave& psi, const Grid& grid, double t);
  /// Throws NumericalError on NaN or Inf.
  void check_finite() const;
};

/// Step and order of the central differences used on callables.
struct FdOptions {
  double step = 1e-2;
  int order = 6;
};

// ---- analytic layer: operators on spacetime callables --------------------

/// nabla_lambda psi = d_lambda psi - i A_lambda psi (lambda = 0 is time).
SpacetimeWave covariant_derivative(SpacetimeWave psi, const GeometryBundle& bundle, int lambda,
                                   FdOptions fd = {});

/// G^hk nabla_h nabla_k psi + G^hk K_h^l_k nabla_l psi.
SpacetimeWave curved_laplacian(SpacetimeWave psi, const GeometryBundle& bundle, FdOptions fd = {});

/// S psi = (nabla_0 + d_0 sqrt(g) / (2 sqrt(g))) psi - (i/2)(Laplacian - k r) psi.
SpacetimeWave schrodinger_apply(SpacetimeWave psi, const GeometryBundle& bundle, double k_factor,
                                FdOptions fd = {});

/// Y[f] = f0 d_0 - f^j d_j + yz z d_z with
/// yz = i (f0 A_0 - f^h A_h + base) - Div X[f] / 2.
struct QuantumVectorField {
  ScalarField y0;
  VectorField yj;
  std::function<Complex(double, const Vec&)> yz;
};

/// Throws ClassificationError if f is not quantisable.
QuantumVectorField quantum_vector_field(const SpecialQuadratic& f, const GeometryBundle& bundle);

/// Div X[f] = f0 d_0 sqrt(g) / sqrt(g) - d_j (f^j sqrt(g)) / sqrt(g).
ScalarField tangent_divergence(const SpecialQuadratic& f, const GeometryBundle& bundle);

/// Y_. psi = X^lambda d_lambda psi - yz psi, the action on the coordinate
/// function of a section.
SpacetimeWave vector_field_action(const QuantumVectorField& y, SpacetimeWave psi, FdOptions fd = {});

/// Z[f] psi = i Y[f]_. psi. Fixes Z[f] psi = base psi for spacetime functions.
SpacetimeWave lie_action(const SpecialQuadratic& f, SpacetimeWave psi, const GeometryBundle& bundle,
                         FdOptions fd = {});

/// f^ psi = -f0 Laplacian psi / 2 - i f^j nabla_j psi + base psi + k f0 r psi / 2
///          - (i/2) d_j (f^j sqrt(g)) / sqrt(g) psi.
/// Fibrewise: it never differentiates in time.
SpacetimeWave operator_apply(const SpecialQuadratic& f, SpacetimeWave psi, const GeometryBundle& bundle,
                             double k_factor, FdOptions fd = {});

struct CommutatorReport {
  double residual = 0.0;    // max |lhs - rhs| over interior samples
  double lhs_scale = 0.0;   // max |lhs|
  double obstruction_scale = 0.0;
  bool obstruction_active = false;
  int samples = 0;
};

struct CommutatorOptions {
  double t = 0.0;
  int margin = 2;             // nodes skipped next to each wall
  double support_tol = 1e-8;  // |psi| allowed on the margin, relative to max |psi|
  FdOptions fd = {};
};

/// Compares [f^, g^] psi with the quantised bracket plus the obstruction
/// term g0 [Y[f]_., S] - f0 [Y[g]_., S] on the chart's interior nodes, where
/// [h, k] = -i (hk - kh). Throws TestStateError if psi does not vanish on the
/// wall margin.
CommutatorReport commutator_check(const SpecialQuadratic& f, const SpecialQuadratic& g, const SpacetimeWave& psi,
                                  const GeometryBundle& bundle, double k_factor, const CommutatorOptions& opts = {});

/// sqrt(g) [ i (psi* nabla_0 psi - psi nabla_0 psi*) - G^hk (nabla_h psi)* nabla_k psi - k r |psi|^2 ].
/// Its Euler-Lagrange expression is 2 i sqrt(g) S psi.
double lagrangian_density(const SpacetimeWave& psi, const GeometryBundle& bundle, double k_factor, double t,
                          const Vec& x, FdOptions fd = {});

/// Spacetime lattice used for action integrals: the chart's interior nodes
/// times `time_samples` equally spaced instants in [t0, t1] (trapezoid in t).
struct ActionLattice {
  double t0 = 0.0;
  double t1 = 1.0;
  int time_samples = 41;
};

double action(const SpacetimeWave& psi, const GeometryBundle& bundle, double k_factor, const ActionLattice& lat,
              FdOptions fd = {});

/// 4 Re(i <eta, S psi>) integrated over the lattice: the first variation of
/// the action along a real direction eta vanishing on the lattice boundary.
double action_variation(const SpacetimeWave& eta, const SpacetimeWave& psi, const GeometryBundle& bundle,
                        double k_factor, const ActionLattice& lat, FdOptions fd = {});

// ---- discrete layer: grid operators ---------------------------------------

/// sqrt(det G) at the grid nodes.
Vec node_density(const GeometryBundle& bundle, const Grid& grid, double t);
/// Scalar curvature of G at the grid nodes.
Vec node_scalar_curvature(const GeometryBundle& bundle, const Grid& grid, double t);

/// Gauge-covariant central difference along a spatial axis (0-based), with
/// Dirichlet walls. Anti-Hermitian in the unweighted inner product.
SparseC covariant_difference(const GeometryBundle& bundle, const Grid& grid, double t, int axis, int order = 2);

struct DiscretisationOptions {
  int order = 2;       // 4, 6, 8 need a spatially constant metric
  double t = 0.0;
};

/// f^ on the grid. Stored as W^{-1} M with W = sqrt(g) at the nodes and M
/// Hermitian, so f^ is Hermitian for <a, b> = sum W a* b dV.
class QuantumOperator {
 public:
  QuantumOperator(SpecialQuadratic source, double k_factor, Grid grid, Vec weights, SparseC weighted);

  const SpecialQuadratic& source() const { return source_; }
  double curvature_factor() const { return k_; }
  const Grid& grid() const { return grid_; }
  const Vec& weights() const { return w_; }
  /// The Hermitian matrix M.
  const SparseC& weighted() const { return m_; }
  /// W^{-1} M.
  SparseC matrix() const;

  CVec apply(const CVec& psi) const;
  WaveFunction apply(const WaveFunction& psi) const;
  /// |<f^ a, b> - <a, f^ b>| / (1 + |<f^ a, b>|) in the weighted inner product.
  double hermiticity_residual(const CVec& a, const CVec& b) const;

 private:
  SpecialQuadratic source_;
  double k_;
  Grid grid_;
  Vec w_;
  SparseC m_;
};

/// Throws ClassificationError if f is not quantisable, DomainError if a
/// high-order stencil is requested on a varying metric.
QuantumOperator quantum_operator(const SpecialQuadratic& f, const GeometryBundle& bundle, double k_factor,
                                 const DiscretisationOptions& opts = {});

/// Weighted Laplacian M_lap (W Laplacian, Hermitian).
SparseC weighted_laplacian(const GeometryBundle& bundle, const Grid& grid, double t, int order = 2);

/// j0 = |psi|^2 sqrt(g), j^i = sqrt(g) G^ij Im(psi* nabla_j psi).
struct ProbabilityCurrent {
  Vec j0;
  std::vector<Vec> j;
};

ProbabilityCurrent probability_current(const WaveFunction& psi, const GeometryBundle& bundle);

/// max |d_0 j0 + d_i j^i| at nodes at least one node from the walls, with
/// d_0 from the outer slices and the divergence from the middle one.
double continuity_residual(const WaveFunction& prev, const WaveFunction& mid, const WaveFunction& next,
                           const GeometryBundle& bundle);

}  // namespace cqm
