// SPDX-FileCopyrightText: (c) 2026 condtraj contributors
//
// SPDX-License-Identifier: Apache-2.0

#include "condtraj/trajectory.hpp"

#include "condtraj/error.hpp"

#include <algorithm>
#include <string>

namespace condtraj {

double normalize_angle(double angle) {
  double a = std::remainder(angle, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

double eval_poly(const std::array<double, kPolyCoeffs> &c, double t) {
  double v = 0.0;
  for (double coeff : c) v = v * t + coeff;
  return v;
}

namespace {

double eval_derivative(const std::array<double, kPolyCoeffs> &c, double t) {
  // d/dt of c0 t^4 + c1 t^3 + c2 t^2 + c3 t + c4
  return ((4.0 * c[0] * t + 3.0 * c[1]) * t + 2.0 * c[2]) * t + c[3];
}

double eval_second_derivative(const std::array<double, kPolyCoeffs> &c, double t) {
  return (12.0 * c[0] * t + 6.0 * c[1]) * t + 2.0 * c[2];
}

// Solves the symmetric positive definite system in place (Cholesky).
bool solve_spd(std::vector<double> &a, std::vector<double> &b, int n) {
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (int k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (int i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (int k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return true;
}

} // namespace

Vec2 PolyTrajectory2D::eval(double t) const { return {eval_poly(cx, t), eval_poly(cy, t)}; }

Vec2 PolyTrajectory2D::velocity(double t) const {
  return {eval_derivative(cx, t), eval_derivative(cy, t)};
}

Vec2 PolyTrajectory2D::acceleration(double t) const {
  return {eval_second_derivative(cx, t), eval_second_derivative(cy, t)};
}

PolyTrajectory2D fit_polynomial(const PointSeries &points, int degree) {
  if (degree < 0 || degree > kPolyDegree) {
    throw Error(ErrorKind::InvalidArgument,
                "fit_polynomial: degree must be in [0, " + std::to_string(kPolyDegree) + "]");
  }
  const int n = degree + 1;
  if (static_cast<int>(points.size()) < n) {
    throw Error(ErrorKind::InsufficientData,
                "fit_polynomial: need at least " + std::to_string(n) + " points, got " +
                    std::to_string(points.size()));
  }
  for (const auto &p : points) {
    if (!std::isfinite(p.t) || !std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorKind::InvalidInput, "fit_polynomial: non-finite point");
    }
  }

  // Normal equations on the monomial basis, column j holds t^(degree-j).
  std::vector<double> ata(n * n, 0.0), atx(n, 0.0), aty(n, 0.0);
  std::vector<double> row(n);
  for (const auto &p : points) {
    double pw = 1.0;
    for (int j = n - 1; j >= 0; --j) {
      row[j] = pw;
      pw *= p.t;
    }
    for (int i = 0; i < n; ++i) {
      atx[i] += row[i] * p.x;
      aty[i] += row[i] * p.y;
      for (int j = 0; j < n; ++j) ata[i * n + j] += row[i] * row[j];
    }
  }
  std::vector<double> chol = ata;
  if (!solve_spd(chol, atx, n)) {
    throw Error(ErrorKind::InsufficientData, "fit_polynomial: degenerate time samples");
  }
  chol = ata;
  solve_spd(chol, aty, n);

  PolyTrajectory2D poly;
  const int offset = kPolyCoeffs - n;
  for (int j = 0; j < n; ++j) {
    poly.cx[offset + j] = atx[j];
    poly.cy[offset + j] = aty[j];
  }
  return poly;
}

PointSeries sample_trajectory(const PolyTrajectory2D &poly, double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "sample_trajectory: dt and horizon must be positive");
  }
  const int count = static_cast<int>(std::floor(horizon / dt + 1e-9));
  PointSeries out;
  out.reserve(count);
  for (int i = 1; i <= count; ++i) {
    const double t = i * dt;
    out.push_back({t, eval_poly(poly.cx, t), eval_poly(poly.cy, t)});
  }
  return out;
}

Vec2 to_frame(Vec2 p, const Pose2D &frame) {
  return rotate(p - frame.position(), -frame.heading);
}

Vec2 from_frame(Vec2 p, const Pose2D &frame) {
  return rotate(p, frame.heading) + frame.position();
}

PointSeries to_frame(const PointSeries &points, const Pose2D &frame) {
  PointSeries out;
  out.reserve(points.size());
  for (const auto &p : points) {
    const Vec2 q = to_frame(Vec2{p.x, p.y}, frame);
    out.push_back({p.t, q.x, q.y});
  }
  return out;
}

PointSeries from_frame(const PointSeries &points, const Pose2D &frame) {
  PointSeries out;
  out.reserve(points.size());
  for (const auto &p : points) {
    const Vec2 q = from_frame(Vec2{p.x, p.y}, frame);
    out.push_back({p.t, q.x, q.y});
  }
  return out;
}

namespace {

double squared_error_sum(const PointSeries &pred, const PointSeries &gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorKind::Shape, "point series length mismatch: " + std::to_string(pred.size()) +
                                      " vs " + std::to_string(gt.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred[i].x - gt[i].x;
    const double dy = pred[i].y - gt[i].y;
    sum += dx * dx + dy * dy;
  }
  return sum;
}

} // namespace

double point_l2_loss(const PointSeries &ego_pred, const PointSeries &ego_gt,
                     std::span<const PointSeries> neigh_pred,
                     std::span<const PointSeries> neigh_gt) {
  if (neigh_pred.size() != neigh_gt.size()) {
    throw Error(ErrorKind::Shape, "neighbor count mismatch");
  }
  double loss = squared_error_sum(ego_pred, ego_gt);
  for (std::size_t k = 0; k < neigh_pred.size(); ++k) {
    loss += squared_error_sum(neigh_pred[k], neigh_gt[k]);
  }
  return loss;
}

double mae(const PointSeries &pred, const PointSeries &gt) {
  if (pred.size() != gt.size()) throw Error(ErrorKind::Shape, "mae: length mismatch");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    sum += std::hypot(pred[i].x - gt[i].x, pred[i].y - gt[i].y);
  }
  return sum / static_cast<double>(pred.size());
}

double mae_at(const PointSeries &pred, const PointSeries &gt, double t) {
  if (pred.size() != gt.size()) throw Error(ErrorKind::Shape, "mae_at: length mismatch");
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (std::abs(gt[i].t - t) < 1e-9) {
      return std::hypot(pred[i].x - gt[i].x, pred[i].y - gt[i].y);
    }
  }
  throw Error(ErrorKind::InvalidArgument, "mae_at: t=" + std::to_string(t) + " is not a sampled instant");
}

} // namespace condtraj
