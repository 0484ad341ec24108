#ifndef ACWB_LEARNER_HPP_
#define ACWB_LEARNER_HPP_

#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "acwb/basis.hpp"
#include "acwb/common.hpp"
#include "acwb/data.hpp"

namespace acwb {

enum class LearnerType {
  linear,               // [1, x]: feature-specific intercept and slope
  centered_spline,      // P-spline with the affine part projected out
  categorical_ridge,    // one-hot, ridge penalized
  cat_cat_interaction,  // one-hot over the level-pair product set, ridge penalized
  varying_coefficient,  // per-level intercept and slope of a numeric feature
  tensor_spline,        // tensor-product P-spline, Kronecker-sum penalty
};

std::string to_string(LearnerType type);
LearnerType learner_type_from_string(std::string_view s);

// Which structured learner and on which features. For varying_coefficient the
// first feature is categorical and the second numeric.
struct LearnerKind {
  LearnerType type = LearnerType::linear;
  std::vector<std::string> features;

  bool operator==(const LearnerKind&) const = default;
  bool is_pair() const { return features.size() == 2; }
  std::string label() const;
};

struct DesignOptions {
  int spline_interior_knots = 20;
  int tensor_interior_knots = 10;
  int degree = 3;
  int penalty_order = 2;
};

// Everything required to rebuild a learner's design on new data.
struct LearnerMeta {
  LearnerKind kind;
  KnotVector<double> knots_a;
  KnotVector<double> knots_b;
  // raw-basis coefficients = transform * theta; empty means identity
  Matrix transform;
  Index levels_a = 0;
  Index levels_b = 0;
  double lambda = 0.0;
  double df = 0.0;

  Index raw_width() const;
  Index width() const { return transform.size() ? transform.cols() : raw_width(); }
  bool operator==(const LearnerMeta& o) const;
};

struct LearnerDesign {
  LearnerMeta meta;
  SparseMatrix basis;  // n x raw_width
  Matrix penalty;      // width x width, in coefficient coordinates

  Matrix dense() const;
};

// Builds the design on `ds` and fixes all data-dependent metadata (knot
// ranges, centering transform, level counts). lambda is left at 0.
LearnerDesign build_design(const LearnerKind& kind, const Dataset& ds, const DesignOptions& options = {});

// Rebuilds the raw basis of an existing learner on new data (splines clamp
// out-of-range inputs to the boundary knots).
SparseMatrix evaluate_basis(const LearnerMeta& meta, const Dataset& ds);
Matrix design_matrix(const LearnerMeta& meta, const Dataset& ds);

// theta = (X'X + lambda P)^-1 X' r via Cholesky; adds a relative 1e-10 jitter
// when the system is numerically singular.
Vector fit_pls(const Matrix& X, const Matrix& penalty, double lambda, const Vector& r);

struct FittedBaseLearner {
  LearnerMeta meta;
  Vector theta;
};

Vector predict(const FittedBaseLearner& learner, const Dataset& ds);

// Coefficient addition of two learners of the same kind and metadata.
FittedBaseLearner combine(const FittedBaseLearner& a, const FittedBaseLearner& b);

// A learner readied for repeated fitting to changing residuals: the design,
// the calibrated penalty and the Cholesky factor are fixed once.
class PreparedLearner {
 public:
  // Calibrates lambda so that the smoother trace equals df.
  PreparedLearner(LearnerDesign design, double df, const Dataset* validation);

  struct Fit {
    Vector theta;
    double sse = 0.0;
  };

  const LearnerMeta& meta() const { return meta_; }
  Index width() const { return meta_.width(); }

  // rr is r'r, passed in so the caller computes it once per iteration.
  Fit fit(const Vector& r, double rr) const;
  void add_to_train(Vector& f, const Vector& theta, double scale) const;
  void add_to_validation(Vector& f, const Vector& theta, double scale) const;
  Vector train_prediction(const Vector& theta) const;
  const Matrix& gram() const { return gram_; }
  const Matrix& penalty() const { return penalty_; }

 private:
  Vector raw(const Vector& theta) const;

  LearnerMeta meta_;
  SparseMatrix basis_;
  SparseMatrix validation_basis_;
  Matrix penalty_;
  Matrix gram_;
  Eigen::LLT<Matrix> llt_;
};

}  // namespace acwb

#endif  // ACWB_LEARNER_HPP_
