#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace symtrack {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

// Rigid transform q = (R, p): x_world = R * x_body + p.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();
};

// Body-frame velocity xi = (omega, v).
struct Twist {
  Vec3 omega = Vec3::Zero();
  Vec3 vel = Vec3::Zero();
};

// Generalized force u = (mu, f) in the body frame.
struct Wrench {
  Vec3 torque = Vec3::Zero();
  Vec3 force = Vec3::Zero();
};

// Skew-symmetric matrix with hat3(w) * y == w.cross(y).
Mat3 hat3(const Vec3& w);

// Rodrigues formula with a second-order Taylor branch below 1e-8 rad.
Mat3 exp_so3(const Vec3& w);

// Inverse of exp_so3; returns the axis-angle vector with norm <= pi.
// Near pi the axis is recovered from the symmetric part, with the sign
// convention fixed by the largest-magnitude axis component.
Vec3 log_so3(const Mat3& R);

// Closed-form exponential of the 4x4 matrix hat(xi) * dt.
Pose exp_se3(const Twist& xi, double dt);

// Inverse of exp_se3 with dt = 1; valid for rotation angle < pi.
Twist log_se3(const Pose& q);

Pose pose_compose(const Pose& a, const Pose& b);
Pose pose_inverse(const Pose& a);

// Geodesic angle between rotations: ||log(r1^T r2)||.
double rot_distance(const Mat3& r1, const Mat3& r2);

Mat3 rot_x(double theta);
Mat3 rot_y(double theta);
Mat3 rot_z(double theta);

// Orthonormality and determinant check used by type invariants.
bool is_rotation(const Mat3& R, double tol = 1e-12);

// Z-Y-X yaw of a rotation matrix (test utility; undefined at |pitch| = pi/2).
double yaw_of(const Mat3& R);

}  // namespace symtrack
