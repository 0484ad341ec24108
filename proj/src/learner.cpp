#include "acwb/learner.hpp"

#include <cmath>
#include <sstream>

namespace acwb {

std::string to_string(LearnerType type) {
  switch (type) {
    case LearnerType::linear:
      return "linear";
    case LearnerType::centered_spline:
      return "centered_spline";
    case LearnerType::categorical_ridge:
      return "categorical_ridge";
    case LearnerType::cat_cat_interaction:
      return "cat_cat_interaction";
    case LearnerType::varying_coefficient:
      return "varying_coefficient";
    case LearnerType::tensor_spline:
      return "tensor_spline";
  }
  return "linear";
}

LearnerType learner_type_from_string(std::string_view s) {
  for (auto t : {LearnerType::linear, LearnerType::centered_spline, LearnerType::categorical_ridge,
                 LearnerType::cat_cat_interaction, LearnerType::varying_coefficient, LearnerType::tensor_spline})
    if (to_string(t) == s) return t;
  throw DataError("unknown learner type '" + std::string(s) + "'");
}

std::string LearnerKind::label() const {
  std::string out = to_string(type) + "(";
  for (std::size_t i = 0; i < features.size(); ++i) out += (i ? "," : "") + features[i];
  return out + ")";
}

Index LearnerMeta::raw_width() const {
  switch (kind.type) {
    case LearnerType::linear:
      return 2;
    case LearnerType::centered_spline:
      return knots_a.dimension();
    case LearnerType::categorical_ridge:
      return levels_a;
    case LearnerType::cat_cat_interaction:
      return levels_a * levels_b;
    case LearnerType::varying_coefficient:
      return 2 * levels_a;
    case LearnerType::tensor_spline:
      return knots_a.dimension() * knots_b.dimension();
  }
  return 0;
}

bool LearnerMeta::operator==(const LearnerMeta& o) const {
  auto same_knots = [](const KnotVector<double>& a, const KnotVector<double>& b) {
    return a.interior == b.interior && a.degree == b.degree && a.lower == b.lower && a.upper == b.upper;
  };
  return kind == o.kind && same_knots(knots_a, o.knots_a) && same_knots(knots_b, o.knots_b) &&
         transform.rows() == o.transform.rows() && transform.cols() == o.transform.cols() &&
         transform == o.transform && levels_a == o.levels_a && levels_b == o.levels_b && lambda == o.lambda &&
         df == o.df;
}

Matrix LearnerDesign::dense() const {
  Matrix B(basis);
  return meta.transform.size() ? Matrix(B * meta.transform) : B;
}

namespace {

const Column& feature(const Dataset& ds, const std::string& name, ColumnKind kind) {
  const auto j = ds.find_column(name);
  if (!j) throw LoadError(LoadErrorKind::schema_mismatch, "feature '" + name + "' is missing");
  const Column& c = ds.columns[static_cast<std::size_t>(*j)];
  if (c.schema.kind != kind)
    throw LoadError(LoadErrorKind::schema_mismatch, "feature '" + name + "' should be " + to_string(kind));
  return c;
}

const Vector& numeric_values(const Dataset& ds, const std::string& name) {
  const Column& c = feature(ds, name, ColumnKind::numeric);
  for (Index i = 0; i < c.numeric.size(); ++i)
    if (std::isnan(c.numeric[i])) throw DataError("feature '" + name + "' contains missing values");
  return c.numeric;
}

std::vector<std::int32_t> level_codes(const Dataset& ds, const std::string& name, Index n_levels) {
  const Column& c = feature(ds, name, ColumnKind::categorical);
  for (auto code : c.codes)
    if (code < 0 || code >= n_levels)
      throw DataError("feature '" + name + "' has a missing or out-of-range level");
  return c.codes;
}

Index level_count(const Dataset& ds, const std::string& name) {
  return static_cast<Index>(feature(ds, name, ColumnKind::categorical).schema.levels.size());
}

KnotVector<double> knots_for(const Vector& x, int n_interior, int degree) {
  const double lo = x.minCoeff();
  const double hi = x.maxCoeff();
  if (!(lo < hi)) throw DataError("spline feature is constant");
  return equidistant_knots<double>(lo, hi, n_interior, degree);
}

SparseMatrix linear_basis(const Vector& x) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(2 * x.size()));
  for (Index i = 0; i < x.size(); ++i) {
    trip.emplace_back(i, 0, 1.0);
    if (x[i] != 0.0) trip.emplace_back(i, 1, x[i]);
  }
  SparseMatrix B(x.size(), 2);
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

SparseMatrix varying_basis(std::span<const std::int32_t> codes, Index levels, const Vector& x) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * codes.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const auto row = static_cast<Index>(i);
    trip.emplace_back(row, codes[i], 1.0);
    if (x[row] != 0.0) trip.emplace_back(row, levels + codes[i], x[row]);
  }
  SparseMatrix B(static_cast<Index>(codes.size()), 2 * levels);
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

std::vector<std::int32_t> pair_codes(std::span<const std::int32_t> a, std::span<const std::int32_t> b, Index levels_b) {
  std::vector<std::int32_t> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = static_cast<std::int32_t>(a[i] * levels_b + b[i]);
  return out;
}

}  // namespace

LearnerDesign build_design(const LearnerKind& kind, const Dataset& ds, const DesignOptions& options) {
  const std::size_t expected = kind.type == LearnerType::linear || kind.type == LearnerType::centered_spline ||
                                       kind.type == LearnerType::categorical_ridge
                                   ? 1
                                   : 2;
  if (kind.features.size() != expected) throw ConfigError("learner " + kind.label() + " has the wrong feature count");
  LearnerDesign d;
  d.meta.kind = kind;
  auto& m = d.meta;
  switch (kind.type) {
    case LearnerType::linear: {
      d.basis = linear_basis(numeric_values(ds, kind.features[0]));
      d.penalty = Matrix::Zero(2, 2);
      d.penalty(1, 1) = 1.0;
      break;
    }
    case LearnerType::centered_spline: {
      const Vector& x = numeric_values(ds, kind.features[0]);
      m.knots_a = knots_for(x, options.spline_interior_knots, options.degree);
      d.basis = bspline_design_sparse<double>(x, m.knots_a);
      try {
        m.transform = centering_transform<double>(d.basis, x);
      } catch (const std::invalid_argument& e) {
        throw DataError("cannot center spline for '" + kind.features[0] + "': " + e.what());
      }
      const Matrix P = difference_penalty<double>(options.penalty_order, m.knots_a.dimension());
      d.penalty = m.transform.transpose() * P * m.transform;
      break;
    }
    case LearnerType::categorical_ridge: {
      m.levels_a = level_count(ds, kind.features[0]);
      d.basis = dummy_encode_sparse<double>(level_codes(ds, kind.features[0], m.levels_a), m.levels_a);
      d.penalty = ridge_penalty<double>(m.levels_a);
      break;
    }
    case LearnerType::cat_cat_interaction: {
      m.levels_a = level_count(ds, kind.features[0]);
      m.levels_b = level_count(ds, kind.features[1]);
      if (m.levels_a * m.levels_b > kMaxTensorWidth) throw DataError("level-pair product set exceeds 10^4 columns");
      const auto codes = pair_codes(level_codes(ds, kind.features[0], m.levels_a),
                                    level_codes(ds, kind.features[1], m.levels_b), m.levels_b);
      d.basis = dummy_encode_sparse<double>(codes, m.levels_a * m.levels_b);
      d.penalty = ridge_penalty<double>(m.levels_a * m.levels_b);
      break;
    }
    case LearnerType::varying_coefficient: {
      m.levels_a = level_count(ds, kind.features[0]);
      d.basis = varying_basis(level_codes(ds, kind.features[0], m.levels_a), m.levels_a,
                              numeric_values(ds, kind.features[1]));
      d.penalty = ridge_penalty<double>(2 * m.levels_a);
      break;
    }
    case LearnerType::tensor_spline: {
      const Vector& xa = numeric_values(ds, kind.features[0]);
      const Vector& xb = numeric_values(ds, kind.features[1]);
      m.knots_a = knots_for(xa, options.tensor_interior_knots, options.degree);
      m.knots_b = knots_for(xb, options.tensor_interior_knots, options.degree);
      try {
        d.basis = row_kronecker<double>(bspline_design_sparse<double>(xa, m.knots_a),
                                        bspline_design_sparse<double>(xb, m.knots_b));
        d.penalty = tensor_penalty<double>(difference_penalty<double>(options.penalty_order, m.knots_a.dimension()),
                                           difference_penalty<double>(options.penalty_order, m.knots_b.dimension()));
      } catch (const std::invalid_argument& e) {
        throw DataError(std::string("tensor spline: ") + e.what());
      }
      break;
    }
  }
  d.basis.makeCompressed();
  return d;
}

SparseMatrix evaluate_basis(const LearnerMeta& m, const Dataset& ds) {
  const auto& f = m.kind.features;
  SparseMatrix B;
  switch (m.kind.type) {
    case LearnerType::linear:
      B = linear_basis(numeric_values(ds, f[0]));
      break;
    case LearnerType::centered_spline:
      B = bspline_design_sparse<double>(numeric_values(ds, f[0]), m.knots_a);
      break;
    case LearnerType::categorical_ridge:
      B = dummy_encode_sparse<double>(level_codes(ds, f[0], m.levels_a), m.levels_a);
      break;
    case LearnerType::cat_cat_interaction:
      B = dummy_encode_sparse<double>(
          pair_codes(level_codes(ds, f[0], m.levels_a), level_codes(ds, f[1], m.levels_b), m.levels_b),
          m.levels_a * m.levels_b);
      break;
    case LearnerType::varying_coefficient:
      B = varying_basis(level_codes(ds, f[0], m.levels_a), m.levels_a, numeric_values(ds, f[1]));
      break;
    case LearnerType::tensor_spline:
      B = row_kronecker<double>(bspline_design_sparse<double>(numeric_values(ds, f[0]), m.knots_a),
                                bspline_design_sparse<double>(numeric_values(ds, f[1]), m.knots_b));
      break;
  }
  B.makeCompressed();
  return B;
}

Matrix design_matrix(const LearnerMeta& meta, const Dataset& ds) {
  Matrix B(evaluate_basis(meta, ds));
  return meta.transform.size() ? Matrix(B * meta.transform) : B;
}

namespace {

Eigen::LLT<Matrix> factorize(Matrix A) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() == Eigen::Success && llt.rcond() > 1e-14) return llt;
  const double scale = std::max(1.0, A.diagonal().cwiseAbs().maxCoeff());
  A.diagonal().array() += 1e-10 * scale;
  llt.compute(A);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "penalized normal equations are singular even after jitter (reciprocal condition estimate "
        << llt.rcond() << ")";
    throw FitError(msg.str());
  }
  return llt;
}

}  // namespace

Vector fit_pls(const Matrix& X, const Matrix& penalty, double lambda, const Vector& r) {
  if (X.rows() != r.size()) throw std::invalid_argument("design and residuals differ in length");
  if (!X.allFinite() || !r.allFinite()) throw FitError("non-finite input to penalized least squares");
  const auto llt = factorize(X.transpose() * X + lambda * penalty);
  return llt.solve(X.transpose() * r);
}

Vector predict(const FittedBaseLearner& learner, const Dataset& ds) {
  const SparseMatrix B = evaluate_basis(learner.meta, ds);
  if (learner.meta.transform.size()) return B * (learner.meta.transform * learner.theta);
  return B * learner.theta;
}

FittedBaseLearner combine(const FittedBaseLearner& a, const FittedBaseLearner& b) {
  if (!(a.meta == b.meta)) throw std::invalid_argument("cannot combine learners with different metadata");
  return {a.meta, a.theta + b.theta};
}

PreparedLearner::PreparedLearner(LearnerDesign design, double df, const Dataset* validation)
    : meta_(std::move(design.meta)), basis_(std::move(design.basis)), penalty_(std::move(design.penalty)) {
  const Matrix raw_gram(basis_.transpose() * basis_);
  gram_ = meta_.transform.size() ? Matrix(meta_.transform.transpose() * raw_gram * meta_.transform) : raw_gram;
  meta_.df = df;
  try {
    meta_.lambda = df_to_lambda_gram<double>(gram_, penalty_, df);
  } catch (const DfUnreachable& e) {
    throw FitError(meta_.kind.label() + ": " + e.what());
  }
  llt_ = factorize(gram_ + meta_.lambda * penalty_);
  if (validation != nullptr && validation->n_rows() > 0) validation_basis_ = evaluate_basis(meta_, *validation);
}

Vector PreparedLearner::raw(const Vector& theta) const {
  return meta_.transform.size() ? Vector(meta_.transform * theta) : theta;
}

PreparedLearner::Fit PreparedLearner::fit(const Vector& r, double rr) const {
  Vector u = basis_.transpose() * r;
  if (meta_.transform.size()) u = meta_.transform.transpose() * u;
  Fit out;
  out.theta = llt_.solve(u);
  out.sse = rr - 2.0 * out.theta.dot(u) + out.theta.dot(gram_ * out.theta);
  return out;
}

void PreparedLearner::add_to_train(Vector& f, const Vector& theta, double scale) const {
  f.noalias() += scale * (basis_ * raw(theta));
}

void PreparedLearner::add_to_validation(Vector& f, const Vector& theta, double scale) const {
  if (validation_basis_.rows() == 0) return;
  f.noalias() += scale * (validation_basis_ * raw(theta));
}

Vector PreparedLearner::train_prediction(const Vector& theta) const { return basis_ * raw(theta); }

}  // namespace acwb
