#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sgbeam {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Raised when a model is evaluated outside the region where it is valid
/// (inside a conductor, below a surface, ...). The integrators translate
/// it into a crash of the trajectory.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Magnetic field and its spatial Jacobian, J(i, j) = dB_i / dx_j.
struct FieldSample {
  Vec3 B = Vec3::Zero();
  Mat3 J = Mat3::Zero();

  FieldSample& operator+=(const FieldSample& other) {
    B += other.B;
    J += other.J;
    return *this;
  }
};

/// Time, position, velocity and spin expectation value of one ion.
/// The spin is dimensionless with |S| = 1/2 for a pure spin-1/2 state.
struct IonState {
  double t = 0.0;
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 S = Vec3::Zero();
};

}  // namespace sgbeam
