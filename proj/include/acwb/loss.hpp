#ifndef ACWB_LOSS_HPP_
#define ACWB_LOSS_HPP_

#include <string>
#include <string_view>

#include "acwb/common.hpp"

namespace acwb {

enum class LossKind { squared_error, binomial };

std::string to_string(LossKind kind);
LossKind loss_from_string(std::string_view s);

// Logistic function, overflow-safe for any finite f.
double sigmoid(double f);
// log(1 + exp(f)) without overflow.
double softplus(double f);

// squared_error: L = (y - f)^2 / 2.  binomial (y in {0,1}): L = log(1 + e^f) - y f.
double loss_value(LossKind kind, double y, double f);
double negative_gradient(LossKind kind, double y, double f);

// Constant minimizing the empirical risk; binomial log-odds are clamped to [-10, 10].
double init_offset(LossKind kind, const Vector& y);

Vector pseudo_residuals(LossKind kind, const Vector& y, const Vector& f);

// Mean loss over the rows.
double empirical_risk(LossKind kind, const Vector& y, const Vector& f);

}  // namespace acwb

#endif  // ACWB_LOSS_HPP_
