#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "cqm/quantum.hpp"

namespace cqm {

/// <a, b> = sum conj(a) b sqrt(g) dV. Throws StructuralError if the slices
/// live on different grids or times.
Complex inner_product(const WaveFunction& a, const WaveFunction& b, const GeometryBundle& bundle);
double norm(const WaveFunction& psi, const GeometryBundle& bundle);

/// Fraction of the weighted mass within `cells` nodes of a wall.
double boundary_mass(const WaveFunction& psi, const GeometryBundle& bundle, int cells = 5);

struct EvolutionConfig {
  double t_start = 0.0;
  double t_end = 1.0;
  int steps = 100;
  int order = 2;  // spatial stencil order, see DiscretisationOptions
  /// Called after every step (and once with step 0 for the initial state).
  std::function<void(int step, const WaveFunction&)> observer;

  void check() const;
};

/// Crank-Nicolson for S psi = 0 with Dirichlet walls. The step is taken on
/// W^{1/2} psi, in which the density term of S drops out and the Hamiltonian
/// is Hermitian in the flat inner product, so the norm is conserved to
/// round-off for every metric. Time-dependent data are evaluated at the
/// midpoint of each step. Throws NumericalError(step) on solve failure.
WaveFunction evolve(const WaveFunction& psi0, const GeometryBundle& bundle, double k_factor,
                    const EvolutionConfig& config);

/// Re <psi, op psi>; the imaginary part is returned through `imag_part`.
/// Throws NormalizationError if |<psi, psi> - 1| > 1e-6.
double expectation(const QuantumOperator& op, const WaveFunction& psi, const GeometryBundle& bundle,
                   double* imag_part = nullptr);

struct SpectrumOptions {
  int order = 2;
  double t = 0.0;
  double tolerance = 1e-9;     // residual relative to 1 + |E|
  int lanczos_steps = 60;      // per pass
  int max_passes = 24;
  double cluster_tol = 1e-6;   // for multiplicities
  unsigned long long seed = 7;
};

struct SpectrumResult {
  std::vector<double> eigenvalues;
  std::vector<WaveFunction> eigenstates;  // orthonormal in the weighted inner product
  std::vector<double> residuals;          // |f^ phi - E phi| in the weighted norm
  /// Sizes of eigenvalue clusters in ascending order.
  std::vector<int> multiplicities(double cluster_tol = 1e-6) const;
};

/// Lowest eigenpairs of the discrete f^ (default H0): shift-invert Lanczos
/// with full reorthogonalisation and deflation of converged pairs.
/// Throws ConvergenceError with the attained residual.
SpectrumResult spectrum(const SpecialQuadratic& f, const GeometryBundle& bundle, double k_factor, int n_modes,
                        const SpectrumOptions& opts = {});

/// Flat binary slice: int32 n, int32 points per axis, then little-endian
/// (re, im) float64 pairs in grid order.
void write_slice(const std::filesystem::path& path, const WaveFunction& psi);
CVec read_slice(const std::filesystem::path& path, std::vector<int>* dims = nullptr);

}  // namespace cqm
