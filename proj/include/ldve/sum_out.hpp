#pragma once

#include <string>
#include <vector>

#include "ldve/factor_tree.hpp"

namespace ldve {

// One leaf visited while summing out a large variable: the constraints the
// path placed on the variable, the solution count when one was computed, and
// the resulting probability mass.
struct LeafMassRecord {
  ConstraintSet context;
  Cardinality solutions;
  bool counted = false;  // false when the mass needed no explicit count
  double mass = 0.0;
};

struct SumOutTrace {
  std::string variable;
  std::vector<LeafMassRecord> leaves;
};

// Sums a small variable out of the factor. Branch sets over y weight their
// subtrees by cardinality; leaves reached without testing y pick up the
// number of y-values still allowed on the path.
Factor sum_out_small(const Factor& f, const std::string& y, const EvalEnv& env);

// Sums a large variable out of the factor (the product of all factors
// mentioning it). Splits on y recurse into each branch under the extended
// context and merge with +; other splits are rebuilt; each leaf label is
// replaced by its probability mass over the y-values satisfying the path
// context. Merged results are re-pruned, which changes no values and keeps
// intermediate trees small. Throws InferenceError when a leaf's mass is
// unbounded.
Factor sum_out_large(const Factor& f, const std::string& y, const EvalEnv& env,
                     SumOutTrace* trace = nullptr);

// Probability mass of one leaf: the label summed over every value of the
// constrained variable that satisfies the context. The label may mention no
// variable other than the constraint subject. Explicit solution sets are
// enumerated; complements admit a closed form when the label depends on the
// variable only through table pdf factors.
MassResult leaf_mass(const LabelPtr& label, const ConstraintSet& ctx,
                     const TableRegistry& tables, const Alphabet& alphabet,
                     LeafMassRecord* record = nullptr);

// A complement solution set split into the finitely many values the label
// can distinguish (entries of any table it references) and a remainder over
// which the label is constant. No closed form exists when the label can
// vary inside the remainder (e.g. a prsing of the summed variable) or when
// the remainder count is unbounded with nonzero per-value mass.
struct ComplementBreakdown {
  std::map<std::string, double> entry_masses;  // distinguished values in the set
  double per_value = 0.0;                      // each remaining value's mass
  Cardinality remaining;
  bool closed_form = true;
};

ComplementBreakdown complement_breakdown(const LabelExpr& label,
                                         const std::string& y,
                                         const SolutionSet& sol,
                                         const TableRegistry& tables,
                                         const Alphabet& alphabet);

}  // namespace ldve
