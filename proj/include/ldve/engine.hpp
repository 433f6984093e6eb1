#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ldve/factor_tree.hpp"
#include "ldve/sum_out.hpp"

namespace ldve {

// A Bayesian network over small and large variables. Each variable owns one
// CPD factor whose scope is the variable plus its parents.
struct Network {
  std::vector<VariableDecl> variables;      // declaration order
  std::map<std::string, Factor> cpds;       // child -> CPD factor
  TableRegistry tables;
  Alphabet alphabet;

  std::map<std::string, VariableDecl> variable_index() const;
  EvalEnv env(const std::map<std::string, VariableDecl>& index) const;
  const VariableDecl& variable(const std::string& name) const;
  std::vector<std::string> parents_of(const std::string& name) const;
};

// Checks declarations, CPD scopes, and acyclicity of the parent graph.
void validate_network(const Network& net);

// Posterior distribution of one query variable. Large variables may carry a
// complement block: the values not listed explicitly, each with the same
// per-value probability.
struct PosteriorComplement {
  ConstraintSet description;
  Cardinality count;
  double per_value = 0.0;
  double total_mass = 0.0;
};

struct Posterior {
  std::string variable;
  std::map<std::string, double> explicit_values;
  std::optional<PosteriorComplement> complement;

  double total() const;
};

// Elimination order over the non-query, non-evidence variables: large
// variables first (they are cheapest right after their evidence is
// absorbed), then by min-fill on the moral graph, ties by name.
std::vector<std::string> elimination_order(const Network& net,
                                           const std::optional<std::string>& query,
                                           const Assignment& evidence);

struct QueryOptions {
  std::vector<std::string> order;  // empty = use elimination_order
  std::vector<SumOutTrace>* traces = nullptr;
};

// Conditions every factor on the evidence, eliminates hidden variables one
// by one (multiply all factors containing the variable, then sum it out),
// multiplies what remains and normalizes. Large query variables produce
// explicit blocks plus at most one complement block.
Posterior posterior(const Network& net, const Assignment& evidence,
                    const std::string& query, const QueryOptions& opts = {});

// Probability of the evidence: sum out every non-evidence variable.
double evidence_likelihood(const Network& net, const Assignment& evidence,
                           const QueryOptions& opts = {});

// Total variation distance between two posteriors over an explicit list of
// values; values absent from a posterior's explicit block take its
// complement per-value probability (or zero without a complement).
double posterior_probability_of(const Posterior& p, const std::string& value);
double total_variation(const Posterior& a, const Posterior& b,
                       const std::vector<std::string>& universe);

}  // namespace ldve
