#include "acwb/loss.hpp"

#include <algorithm>
#include <cmath>

namespace acwb {

std::string to_string(LossKind kind) { return kind == LossKind::binomial ? "binomial" : "squared_error"; }

LossKind loss_from_string(std::string_view s) {
  if (s == "binomial") return LossKind::binomial;
  if (s == "squared_error") return LossKind::squared_error;
  throw ConfigError("unknown loss '" + std::string(s) + "'");
}

double sigmoid(double f) {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

double softplus(double f) { return std::max(f, 0.0) + std::log1p(std::exp(-std::abs(f))); }

double loss_value(LossKind kind, double y, double f) {
  if (kind == LossKind::squared_error) return 0.5 * (y - f) * (y - f);
  return softplus(f) - y * f;
}

double negative_gradient(LossKind kind, double y, double f) {
  if (kind == LossKind::squared_error) return y - f;
  return y - sigmoid(f);
}

double init_offset(LossKind kind, const Vector& y) {
  if (y.size() == 0) throw FitError("cannot compute an offset for an empty target");
  const double mean = y.mean();
  if (kind == LossKind::squared_error) return mean;
  if (mean <= 0.0) return -10.0;
  if (mean >= 1.0) return 10.0;
  return std::clamp(std::log(mean / (1.0 - mean)), -10.0, 10.0);
}

Vector pseudo_residuals(LossKind kind, const Vector& y, const Vector& f) {
  if (y.size() != f.size()) throw std::invalid_argument("target and prediction lengths differ");
  Vector r(y.size());
  for (Index i = 0; i < y.size(); ++i) r[i] = negative_gradient(kind, y[i], f[i]);
  return r;
}

double empirical_risk(LossKind kind, const Vector& y, const Vector& f) {
  if (y.size() != f.size()) throw std::invalid_argument("target and prediction lengths differ");
  if (y.size() == 0) return 0.0;
  double acc = 0.0;
  for (Index i = 0; i < y.size(); ++i) acc += loss_value(kind, y[i], f[i]);
  return acc / static_cast<double>(y.size());
}

}  // namespace acwb
