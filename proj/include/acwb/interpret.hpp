#ifndef ACWB_INTERPRET_HPP_
#define ACWB_INTERPRET_HPP_

#include <string>
#include <vector>

#include "acwb/stages.hpp"

namespace acwb {

enum class TermStage { uni, pint };
std::string to_string(TermStage stage);

struct VipEntry {
  // Feature name, or "a:b" for a pair.
  std::string term;
  std::vector<std::string> features;
  TermStage stage = TermStage::uni;
  double vip = 0.0;
};

// Training-risk reduction attributed to each selected term, descending.
// Linear and spline learners of one feature pool into a single entry.
struct VipTable {
  std::vector<VipEntry> entries;

  double total(TermStage stage) const;
  std::vector<VipEntry> stage_entries(TermStage stage) const;
};

VipTable variable_importance(const AcwbModel& model, int component = 0);

struct ComplexityReport {
  double rho_uni = 0.0;
  double rho_pint = 0.0;
  double rho_deep = 0.0;
  RiskCheckpoints checkpoints;
  double delta = 0.0;
  bool ran_pint = false;
  bool ran_deep = false;
  // Univariate risk reduction at iterations selecting linear (including
  // categorical) learners versus spline learners.
  double uni_linear = 0.0;
  double uni_nonlinear = 0.0;
  std::vector<std::string> warnings;
};

// The interaction fraction is (R_uni - R_pint) / delta, so the three
// fractions telescope to one.
inline constexpr const char* kRhoPintDefinition = "(R_uni - R_pint) / (R_0 - R_last)";

ComplexityReport complexity_report(const AcwbModel& model, int component = 0);

struct EffectCurve {
  std::string feature;
  bool numeric = true;
  std::vector<double> grid;
  std::vector<std::string> levels;
  std::vector<double> total;
  std::vector<double> linear_part;
  std::vector<double> nonlinear_part;
};

EffectCurve partial_effect(const AcwbModel& model, const std::string& feature, int grid_size = 100,
                           int component = 0);

struct InteractionSurface {
  LearnerKind kind;
  // Axis labels: numeric grid values or level names.
  std::vector<std::string> feature_names;
  std::vector<double> grid_a;
  std::vector<double> grid_b;
  std::vector<std::string> levels_a;
  std::vector<std::string> levels_b;
  Matrix values;  // rows follow the first axis
  bool selected = false;
};

InteractionSurface interaction_surface(const AcwbModel& model, const std::string& feature_a,
                                       const std::string& feature_b, int grid_size = 50, int component = 0);

struct Contribution {
  std::string term;
  double value = 0.0;
};

struct Decomposition {
  double offset = 0.0;
  std::vector<Contribution> univariate;
  std::vector<Contribution> pairs;
  double deep = 0.0;
  double total = 0.0;
};

// Per-term contributions of one row of preprocessed data.
Decomposition decompose_prediction(const AcwbModel& model, const Dataset& processed, Index row,
                                   int component = 0);

}  // namespace acwb

#endif  // ACWB_INTERPRET_HPP_
