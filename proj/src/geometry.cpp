#include "symtrack/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace symtrack {

namespace {
constexpr double kSmallAngle = 1e-8;  // Taylor branch threshold [rad]
// Distance from pi below which log_so3 switches to the symmetric-part axis
// recovery; the sin-based general branch loses precision as 1/(pi - angle).
constexpr double kPiBranch = 1e-4;
}  // namespace

Mat3 hat3(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return m;
}

Mat3 exp_so3(const Vec3& w) {
  double theta2 = w.squaredNorm();
  double theta = std::sqrt(theta2);
  Mat3 k = hat3(w);
  double a, b;  // R = I + a*K + b*K^2
  if (theta < kSmallAngle) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * k + b * (k * k);
}

Vec3 log_so3(const Mat3& R) {
  double cos_theta = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  Vec3 s;  // vee of the antisymmetric part = sin(theta) * axis
  s << R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1);
  s *= 0.5;
  // atan2 keeps the angle well-conditioned over the whole range
  double theta = std::atan2(s.norm(), cos_theta);

  if (theta < kSmallAngle) {
    return (1.0 + theta * theta / 6.0) * s;
  }
  if (theta > M_PI - kPiBranch) {
    // Near pi the axis comes from the symmetric part:
    // aa^T = (S - cos*I)/(1-cos).
    cos_theta = std::cos(theta);
    Mat3 sym = 0.5 * (R + R.transpose());
    Vec3 diag = (sym.diagonal().array() - cos_theta) / (1.0 - cos_theta);
    int i = 0;
    diag.maxCoeff(&i);
    Vec3 axis;
    axis[i] = std::sqrt(std::max(diag[i], 0.0));
    double denom = axis[i] * (1.0 - cos_theta);
    for (int j = 0; j < 3; ++j) {
      if (j != i) axis[j] = sym(i, j) / denom;
    }
    axis.normalize();
    // Keep consistency with the antisymmetric part when it is not fully
    // degenerate; otherwise use the canonical largest-component-positive sign.
    if (s.norm() > 1e-12) {
      if (axis.dot(s) < 0.0) axis = -axis;
    }
    return theta * axis;
  }
  return (theta / s.norm()) * s;
}

Pose exp_se3(const Twist& xi, double dt) {
  Vec3 phi = xi.omega * dt;
  double theta2 = phi.squaredNorm();
  double theta = std::sqrt(theta2);
  Mat3 k = hat3(phi);
  double b, c;  // V = I + b*K + c*K^2
  if (theta < kSmallAngle) {
    b = 0.5 - theta2 / 24.0;
    c = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    b = (1.0 - std::cos(theta)) / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  Mat3 v = Mat3::Identity() + b * k + c * (k * k);
  Pose out;
  out.R = exp_so3(phi);
  out.p = v * (xi.vel * dt);
  return out;
}

Twist log_se3(const Pose& q) {
  Vec3 phi = log_so3(q.R);
  double theta2 = phi.squaredNorm();
  double theta = std::sqrt(theta2);
  Mat3 k = hat3(phi);
  double d;  // V^{-1} = I - K/2 + d*K^2
  if (theta < 1e-4) {
    d = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    d = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / theta2;
  }
  Mat3 v_inv = Mat3::Identity() - 0.5 * k + d * (k * k);
  Twist out;
  out.omega = phi;
  out.vel = v_inv * q.p;
  return out;
}

Pose pose_compose(const Pose& a, const Pose& b) {
  Pose out;
  out.R = a.R * b.R;
  out.p = a.R * b.p + a.p;
  return out;
}

Pose pose_inverse(const Pose& a) {
  Pose out;
  out.R = a.R.transpose();
  out.p = -(out.R * a.p);
  return out;
}

double rot_distance(const Mat3& r1, const Mat3& r2) {
  return log_so3(r1.transpose() * r2).norm();
}

Mat3 rot_x(double theta) {
  return exp_so3(Vec3(theta, 0.0, 0.0));
}

Mat3 rot_y(double theta) {
  return exp_so3(Vec3(0.0, theta, 0.0));
}

Mat3 rot_z(double theta) {
  return exp_so3(Vec3(0.0, 0.0, theta));
}

bool is_rotation(const Mat3& R, double tol) {
  double ortho = (R.transpose() * R - Mat3::Identity()).norm();
  return ortho < tol && std::abs(R.determinant() - 1.0) < tol;
}

double yaw_of(const Mat3& R) {
  return std::atan2(R(1, 0), R(0, 0));
}

}  // namespace symtrack
