// Rigid-body math on SO(3)/SE(3): quaternion poses, twists, exp/log maps.
// Header-only, templated on scalar; double aliases are what the rest of the
// library uses.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>

namespace voxloop {

// Thrown by log_map when the rotation angle is within 1e-6 of pi, where the
// axis is numerically ill-conditioned. Callers must perturb or reject.
struct AngleNearPiError : std::runtime_error {
  AngleNearPiError() : std::runtime_error("log_map: rotation angle within 1e-6 of pi") {}
};

/// Element of se(3): rotational part omega [rad], translational part v [m].
template <typename Scalar>
struct TwistT {
  Eigen::Matrix<Scalar, 3, 1> omega = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Eigen::Matrix<Scalar, 3, 1> v = Eigen::Matrix<Scalar, 3, 1>::Zero();

  TwistT() = default;
  TwistT(const Eigen::Matrix<Scalar, 3, 1>& w, const Eigen::Matrix<Scalar, 3, 1>& t)
      : omega(w), v(t) {}

  /// Stacked [omega; v] 6-vector.
  Eigen::Matrix<Scalar, 6, 1> vector() const {
    Eigen::Matrix<Scalar, 6, 1> x;
    x << omega, v;
    return x;
  }
  static TwistT from_vector(const Eigen::Matrix<Scalar, 6, 1>& x) {
    return TwistT(x.template head<3>(), x.template tail<3>());
  }
  Scalar norm() const { return vector().norm(); }
};

/// Rigid transform stored as unit quaternion + translation. Composition
/// renormalizes, so long products stay on the manifold.
template <typename Scalar>
struct PoseT {
  Eigen::Quaternion<Scalar> rotation = Eigen::Quaternion<Scalar>::Identity();
  Eigen::Matrix<Scalar, 3, 1> translation = Eigen::Matrix<Scalar, 3, 1>::Zero();

  PoseT() = default;
  PoseT(const Eigen::Quaternion<Scalar>& q, const Eigen::Matrix<Scalar, 3, 1>& t)
      : rotation(q.normalized()), translation(t) {}

  static PoseT identity() { return PoseT(); }

  Eigen::Matrix<Scalar, 3, 3> rotation_matrix() const { return rotation.toRotationMatrix(); }

  /// 4x4 homogeneous matrix.
  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotation_matrix();
    m.template topRightCorner<3, 1>() = translation;
    return m;
  }

  Eigen::Matrix<Scalar, 3, 1> operator*(const Eigen::Matrix<Scalar, 3, 1>& p) const {
    return rotation * p + translation;
  }
};

using Twist = TwistT<double>;
using Pose = PoseT<double>;

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> skew(const Eigen::Matrix<Scalar, 3, 1>& v) {
  Eigen::Matrix<Scalar, 3, 3> s;
  s << Scalar(0), -v.z(), v.y(),
       v.z(), Scalar(0), -v.x(),
       -v.y(), v.x(), Scalar(0);
  return s;
}

namespace detail {

// V-matrix coupling rotation and translation in the SE(3) exponential,
// a.k.a. the left Jacobian of SO(3). 2nd-order Taylor below the small-angle
// threshold.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> left_jacobian(const Eigen::Matrix<Scalar, 3, 1>& omega) {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  const Scalar theta = omega.norm();
  const Mat3 w = skew(omega);
  if (theta < Scalar(1e-8)) {
    return Mat3::Identity() + Scalar(0.5) * w + w * w / Scalar(6);
  }
  const Scalar t2 = theta * theta;
  const Scalar a = (Scalar(1) - std::cos(theta)) / t2;
  const Scalar b = (theta - std::sin(theta)) / (t2 * theta);
  return Mat3::Identity() + a * w + b * w * w;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> left_jacobian_inverse(const Eigen::Matrix<Scalar, 3, 1>& omega) {
  using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
  const Scalar theta = omega.norm();
  const Mat3 w = skew(omega);
  if (theta < Scalar(1e-8)) {
    return Mat3::Identity() - Scalar(0.5) * w + w * w / Scalar(12);
  }
  const Scalar half = Scalar(0.5) * theta;
  const Scalar c = (Scalar(1) - half * std::cos(half) / std::sin(half)) / (theta * theta);
  return Mat3::Identity() - Scalar(0.5) * w + c * w * w;
}

}  // namespace detail

/// SE(3) exponential: closed-form Rodrigues rotation plus V-matrix coupled
/// translation. Total on finite input.
template <typename Scalar>
PoseT<Scalar> exp_map(const TwistT<Scalar>& t) {
  const Scalar theta = t.omega.norm();
  Eigen::Quaternion<Scalar> q;
  if (theta < Scalar(1e-8)) {
    // sin(theta/2)/theta ~ 1/2 - theta^2/48
    const Scalar k = Scalar(0.5) - theta * theta / Scalar(48);
    q = Eigen::Quaternion<Scalar>(std::cos(theta / Scalar(2)), k * t.omega.x(),
                                  k * t.omega.y(), k * t.omega.z());
  } else {
    q = Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(theta, t.omega / theta));
  }
  q.normalize();
  return PoseT<Scalar>(q, detail::left_jacobian(t.omega) * t.v);
}

/// SE(3) logarithm, inverse of exp_map for rotation angles below pi - 1e-6.
/// Throws AngleNearPiError past that.
template <typename Scalar>
TwistT<Scalar> log_map(const PoseT<Scalar>& p) {
  Eigen::Quaternion<Scalar> q = p.rotation.normalized();
  if (q.w() < Scalar(0)) q.coeffs() *= Scalar(-1);
  const Scalar vec_norm = q.vec().norm();
  const Scalar theta = Scalar(2) * std::atan2(vec_norm, q.w());
  if (theta > Scalar(M_PI) - Scalar(1e-6)) throw AngleNearPiError();

  Eigen::Matrix<Scalar, 3, 1> omega;
  if (theta < Scalar(1e-8)) {
    // omega = 2/w * vec * (1 - |vec|^2/(3 w^2))  to 2nd order
    omega = Scalar(2) / q.w() * q.vec() *
            (Scalar(1) - vec_norm * vec_norm / (Scalar(3) * q.w() * q.w()));
  } else {
    omega = theta / vec_norm * q.vec();
  }
  TwistT<Scalar> t;
  t.omega = omega;
  t.v = detail::left_jacobian_inverse(omega) * p.translation;
  return t;
}

template <typename Scalar>
PoseT<Scalar> compose(const PoseT<Scalar>& a, const PoseT<Scalar>& b) {
  Eigen::Quaternion<Scalar> q = a.rotation * b.rotation;
  q.normalize();
  return PoseT<Scalar>(q, a.rotation * b.translation + a.translation);
}

template <typename Scalar>
PoseT<Scalar> inverse(const PoseT<Scalar>& p) {
  const Eigen::Quaternion<Scalar> qi = p.rotation.conjugate();
  return PoseT<Scalar>(qi, qi * (-p.translation));
}

/// Relative pose taking b's frame into a's frame: a^-1 * b.
template <typename Scalar>
PoseT<Scalar> between(const PoseT<Scalar>& a, const PoseT<Scalar>& b) {
  return compose(inverse(a), b);
}

/// Rotation angle [rad] of the relative rotation between two poses.
template <typename Scalar>
Scalar rotation_distance(const PoseT<Scalar>& a, const PoseT<Scalar>& b) {
  const Eigen::Quaternion<Scalar> dq = a.rotation.conjugate() * b.rotation;
  return Scalar(2) * std::atan2(dq.vec().norm(), std::abs(dq.w()));
}

template <typename Scalar>
Scalar translation_distance(const PoseT<Scalar>& a, const PoseT<Scalar>& b) {
  return (a.translation - b.translation).norm();
}

}  // namespace voxloop
