#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cqm/chart.hpp"
#include "cqm/fields.hpp"

namespace cqm {

/// Coefficients K_lambda^h_mu of a time-preserving spacetime connection.
///
/// lambda, mu range over chart axes 0..n (0 is time); the upper index h is
/// spatial and stored 0-based (h = 0 means x^1). There is no upper time
/// index, which is how time preservation is enforced.
///
/// Sign convention: geodesics read x''^h = K_lambda^h_mu x'^lambda x'^mu, so
/// the spatial part of a metric connection is minus the Christoffel symbols.
class Connection {
 public:
  Connection() = default;
  explicit Connection(int n) : n_(n), c_(static_cast<std::size_t>((n + 1) * n * (n + 1)), 0.0) {}

  int dim() const { return n_; }
  double& operator()(int lambda, int h, int mu) { return c_[index(lambda, h, mu)]; }
  double operator()(int lambda, int h, int mu) const { return c_[index(lambda, h, mu)]; }

  Connection& operator+=(const Connection& o);
  Vec flat() const { return Eigen::Map<const Vec>(c_.data(), static_cast<Eigen::Index>(c_.size())); }
  static Connection from_flat(int n, const Vec& v);
  friend Connection operator+(Connection a, const Connection& b) { return a += b; }
  friend Connection operator-(Connection a, const Connection& b);
  double max_abs() const;

 private:
  std::size_t index(int lambda, int h, int mu) const {
    return static_cast<std::size_t>((lambda * n_ + h) * (n_ + 1) + mu);
  }
  int n_ = 0;
  std::vector<double> c_;
};

using ConnectionField = std::function<Connection(double t, const Vec& x)>;

/// Everything the classical and quantum layers need from spacetime, in one
/// chart: the rescaled metric G, the gravitational connection, the rescaled
/// electromagnetic 2-form F, their composition K and the Poincare-Cartan
/// potential A_lambda seen by the chart observer.
struct GeometryBundle {
  FibredChart chart;
  MatrixField metric;       // G_ij, n x n
  ConnectionField grav;     // K-natural
  MatrixField em;           // F_{lambda mu}, (n+1) x (n+1)
  ConnectionField total;    // K
  VectorField potential;    // A_lambda, n+1 entries
  double fd_step = 1e-3;    // step for derivatives of the closed-form fields

  int dim() const { return chart.n; }
  Mat metric_inverse(double t, const Vec& x) const;
  /// sqrt(det G)
  double density(double t, const Vec& x) const;
  /// d_lambda sqrt|g| / sqrt|g|
  double log_density_derivative(double t, const Vec& x, int lambda) const;
};

/// Pointwise composition: spatial coefficients untouched,
/// K_0^h_j = K_j^h_0 = grav + F^h_j / 2 and K_0^h_0 = grav + F^h_0,
/// with F^h raised by G.
Connection compose_total_connection(const Connection& grav, const Mat& em, const Mat& metric);
ConnectionField compose_total_connection(ConnectionField grav, MatrixField em, MatrixField metric);

/// Metric connection of G plus an optional Newtonian potential phi:
/// K_i^h_j = -Gamma^h_ij, K_0^h_j = -G^hk d_0 G_kj / 2, K_0^h_0 = -G^hk d_k phi.
ConnectionField levi_civita_connection(MatrixField metric, double fd_step,
                                       ScalarField newton_potential = nullptr);

/// F_{lambda mu} = d_lambda A_mu - d_mu A_lambda.
MatrixField exterior_derivative(VectorField potential, double fd_step);

struct BundleInputs {
  FibredChart chart;
  MatrixField metric;
  VectorField potential;
  ScalarField newton_potential;  // optional, default 0
  ConnectionField grav;          // optional override of the metric connection
  MatrixField em;                // optional override of the potential's 2-form
  double fd_step = 1e-3;
};

/// Assembles a bundle. Missing pieces are derived so that the result is
/// admissible: grav from G (and phi), em = d(A + phi dt).
GeometryBundle make_bundle(BundleInputs in);

/// Flat bundle with G = identity and the given potential (default zero).
GeometryBundle flat_bundle(const FibredChart& chart, VectorField potential = nullptr);

/// Fibrewise Riemannian scalar curvature of G(t, .) on the chart grid,
/// second-order central differences, one-sided at the outer nodes.
Vec scalar_curvature(const MatrixField& metric, const Grid& grid, double t);

/// Same quantity at one point, from higher-order differences of the closed form.
double scalar_curvature_at(const MatrixField& metric, double t, const Vec& x, double fd_step);

/// Christoffel symbols Gamma^h_ij of G at a point (index [h](i, j)).
std::vector<Mat> christoffel(const MatrixField& metric, double t, const Vec& x, double fd_step);

struct GeometryResiduals {
  double metric_compatibility = 0.0;  // max |nabla G| for the total connection
  double curvature_symmetry = 0.0;    // grav curvature, both free indices raised by G
  double em_closure = 0.0;            // max |dF|
  double em_antisymmetry = 0.0;
  double torsion = 0.0;               // max |K_lambda^h_mu - K_mu^h_lambda|
  double total_consistency = 0.0;     // max |K - compose(grav, em)|
  double metric_symmetry = 0.0;
  double min_metric_eigenvalue = 0.0;
  int samples = 0;

  double worst() const;
  /// Name/value rows in report order.
  std::vector<std::pair<std::string, double>> rows() const;
};

struct ValidationOptions {
  int samples_per_axis = 7;
  std::vector<double> times;  // default: chart.t0 and chart.t0 + chart.time_step
};

GeometryResiduals validate_geometry(const GeometryBundle& bundle, const ValidationOptions& opts = {});

/// Riemann tensor R^h_{sigma mu nu} of a spacetime connection at a point,
/// indexed [h][sigma](mu, nu); h spatial 0-based, the others chart axes.
std::vector<std::vector<Mat>> riemann(const ConnectionField& connection, int n, double t,
                                      const Vec& x, double fd_step);

/// Interior sample points used by the validation and classification passes.
std::vector<Vec> interior_samples(const FibredChart& chart, int per_axis);

}  // namespace cqm
