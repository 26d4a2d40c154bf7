// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#ifndef CONDTRAJ_TRAJECTORY_HPP
#define CONDTRAJ_TRAJECTORY_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace condtraj {

inline constexpr double kTickSeconds = 0.1;
inline constexpr double kHorizonSeconds = 2.0;
inline constexpr int kPolyDegree = 4;
inline constexpr int kPolyCoeffs = kPolyDegree + 1;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 &operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  bool operator==(const Vec2 &) const = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline Vec2 unit_vector(double heading) { return {std::cos(heading), std::sin(heading)}; }

// Wraps into (-pi, pi].
double normalize_angle(double angle);

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose2D &) const = default;
};

struct TimedPoint2D {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const TimedPoint2D &) const = default;
};

using PointSeries = std::vector<TimedPoint2D>;

// x(t) = cx[0] t^4 + cx[1] t^3 + cx[2] t^2 + cx[3] t + cx[4], same for y.
struct PolyTrajectory2D {
  std::array<double, kPolyCoeffs> cx{};
  std::array<double, kPolyCoeffs> cy{};
  double horizon = kHorizonSeconds;

  Vec2 eval(double t) const;
  Vec2 velocity(double t) const;
  Vec2 acceleration(double t) const;
  bool operator==(const PolyTrajectory2D &) const = default;
};

double eval_poly(const std::array<double, kPolyCoeffs> &c, double t);

PolyTrajectory2D fit_polynomial(const PointSeries &points, int degree = kPolyDegree);

// Points at t = dt, 2 dt, ..., horizon.
PointSeries sample_trajectory(const PolyTrajectory2D &poly, double dt = kTickSeconds,
                              double horizon = kHorizonSeconds);

PointSeries to_frame(const PointSeries &points, const Pose2D &frame);
PointSeries from_frame(const PointSeries &points, const Pose2D &frame);
Vec2 to_frame(Vec2 p, const Pose2D &frame);
Vec2 from_frame(Vec2 p, const Pose2D &frame);

double point_l2_loss(const PointSeries &ego_pred, const PointSeries &ego_gt,
                     std::span<const PointSeries> neigh_pred,
                     std::span<const PointSeries> neigh_gt);

double mae(const PointSeries &pred, const PointSeries &gt);
double mae_at(const PointSeries &pred, const PointSeries &gt, double t);

// Number of points of a sampled trajectory (20 for the default tick/horizon).
inline constexpr int kFuturePoints = 20;

} // namespace condtraj

#endif // CONDTRAJ_TRAJECTORY_HPP
