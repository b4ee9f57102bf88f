#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>

namespace pointstream {

template <typename Scalar>
using Point3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3T = Eigen::Matrix<Scalar, 3, 3>;

/// Position in meters. Frames are right-handed; camera frames look down +z
/// with +x right and +y down, LiDAR frames have +x forward and +z up.
using Point3 = Point3T<double>;
using Matrix3 = Matrix3T<double>;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Rigid transform p' = R p + t.
template <typename Scalar>
struct PoseT {
  Matrix3T<Scalar> rotation = Matrix3T<Scalar>::Identity();
  Point3T<Scalar> translation = Point3T<Scalar>::Zero();

  static PoseT identity() { return {}; }

  static PoseT from(const Matrix3T<Scalar>& r, const Point3T<Scalar>& t) {
    PoseT p;
    p.rotation = r;
    p.translation = t;
    return p;
  }

  bool is_identity() const {
    return rotation == Matrix3T<Scalar>::Identity() && translation.isZero(0);
  }

  Point3T<Scalar> apply(const Point3T<Scalar>& p) const { return rotation * p + translation; }

  /// Rotation only, for directions.
  Point3T<Scalar> rotate(const Point3T<Scalar>& d) const { return rotation * d; }

  PoseT inverse() const {
    PoseT inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  /// (this * other).apply(p) == this->apply(other.apply(p))
  PoseT operator*(const PoseT& other) const {
    PoseT out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }

  /// Orthonormal with det = +1 within `tol`, and finite.
  bool is_valid(Scalar tol = Scalar(1e-9)) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const Scalar dev =
        (rotation.transpose() * rotation - Matrix3T<Scalar>::Identity()).cwiseAbs().maxCoeff();
    return dev <= tol && std::abs(rotation.determinant() - Scalar(1)) <= 4 * tol;
  }
};

using Pose = PoseT<double>;

/// Rotation about a unit axis by `radians`.
template <typename Scalar = double>
Matrix3T<Scalar> axis_angle(const Point3T<Scalar>& axis, Scalar radians) {
  return Eigen::AngleAxis<Scalar>(radians, axis.normalized()).toRotationMatrix();
}

constexpr double deg_to_rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }

}  // namespace pointstream
