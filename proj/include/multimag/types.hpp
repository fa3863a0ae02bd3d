#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace multimag {

using Vec3 = Eigen::Vector3d;
using Vector = Eigen::VectorXd;

/// P1 scalar function: one value per mesh node.
struct NodalScalarField {
  Vector values;

  NodalScalarField() = default;
  explicit NodalScalarField(std::size_t n) : values(Vector::Zero(static_cast<Eigen::Index>(n))) {}
  explicit NodalScalarField(Vector v) : values(std::move(v)) {}

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double& operator[](std::size_t i) { return values[static_cast<Eigen::Index>(i)]; }
  double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
};

/// P1 vector function: one 3-vector per mesh node.
struct NodalVectorField {
  std::vector<Vec3> values;

  NodalVectorField() = default;
  explicit NodalVectorField(std::size_t n, const Vec3& fill = Vec3::Zero()) : values(n, fill) {}
  explicit NodalVectorField(std::vector<Vec3> v) : values(std::move(v)) {}

  [[nodiscard]] std::size_t size() const { return values.size(); }
  Vec3& operator[](std::size_t i) { return values[i]; }
  const Vec3& operator[](std::size_t i) const { return values[i]; }

  /// Node-major packing [x0 y0 z0 x1 ...].
  [[nodiscard]] Vector packed() const;
  static NodalVectorField unpack(const Vector& packed);

  NodalVectorField& operator+=(const NodalVectorField& other);
  NodalVectorField& operator*=(double s);
  [[nodiscard]] bool all_finite() const;
};

NodalVectorField operator+(NodalVectorField a, const NodalVectorField& b);
NodalVectorField operator-(NodalVectorField a, const NodalVectorField& b);
NodalVectorField operator*(double s, NodalVectorField a);

/// Piecewise-constant density on a boundary triangulation: one value per face.
struct FaceDensity {
  Vector values;

  FaceDensity() = default;
  explicit FaceDensity(std::size_t n) : values(Vector::Zero(static_cast<Eigen::Index>(n))) {}
  explicit FaceDensity(Vector v) : values(std::move(v)) {}

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double& operator[](std::size_t i) { return values[static_cast<Eigen::Index>(i)]; }
  double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
};

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double final_residual, std::size_t iterations)
      : std::runtime_error(what), residual_(final_residual), iterations_(iterations) {}

  [[nodiscard]] double residual() const { return residual_; }
  [[nodiscard]] std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

}  // namespace multimag
