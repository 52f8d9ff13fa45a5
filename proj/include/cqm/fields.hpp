#pragma once

#include <complex>
#include <functional>

#include <Eigen/Dense>

namespace cqm {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;

// Closed-form fields over a spacetime chart, evaluated at (t, x).
using ScalarField = std::function<double(double t, const Vec& x)>;
using VectorField = std::function<Vec(double t, const Vec& x)>;
using MatrixField = std::function<Mat(double t, const Vec& x)>;

/// Complex function on spacetime; the analytic stand-in for a quantum section.
using SpacetimeWave = std::function<Complex(double t, const Vec& x)>;

}  // namespace cqm
