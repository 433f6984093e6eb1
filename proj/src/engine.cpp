#include "ldve/engine.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ldve {

std::map<std::string, VariableDecl> Network::variable_index() const {
  std::map<std::string, VariableDecl> index;
  for (const VariableDecl& v : variables) index.emplace(v.name, v);
  return index;
}

EvalEnv Network::env(const std::map<std::string, VariableDecl>& index) const {
  return EvalEnv{&index, &tables, &alphabet};
}

const VariableDecl& Network::variable(const std::string& name) const {
  for (const VariableDecl& v : variables) {
    if (v.name == name) return v;
  }
  throw std::invalid_argument("unknown variable: " + name);
}

std::vector<std::string> Network::parents_of(const std::string& name) const {
  auto it = cpds.find(name);
  if (it == cpds.end()) throw std::invalid_argument("no CPD for " + name);
  std::vector<std::string> parents;
  for (const std::string& v : it->second.scope) {
    if (v != name) parents.push_back(v);
  }
  return parents;
}

void validate_network(const Network& net) {
  std::set<std::string> names;
  for (const VariableDecl& v : net.variables) {
    if (!names.insert(v.name).second) {
      throw std::invalid_argument("duplicate variable name: " + v.name);
    }
    if (v.domain.is_small() && v.domain.values.empty()) {
      throw std::invalid_argument("small variable " + v.name + " has no values");
    }
    if (v.domain.is_large() && v.domain.alphabet.size() < 2) {
      throw std::invalid_argument("large variable " + v.name +
                                  " needs an alphabet of >= 2 characters");
    }
  }
  auto index = net.variable_index();
  EvalEnv env = net.env(index);
  for (const auto& [child, cpd] : net.cpds) {
    if (!names.count(child)) {
      throw std::invalid_argument("CPD for undeclared variable " + child);
    }
    if (!std::binary_search(cpd.scope.begin(), cpd.scope.end(), child)) {
      throw std::invalid_argument("CPD scope of " + child +
                                  " does not contain the child");
    }
    validate_factor(cpd, env);
  }
  for (const VariableDecl& v : net.variables) {
    if (!net.cpds.count(v.name)) {
      throw std::invalid_argument("variable " + v.name + " has no CPD");
    }
  }
  // Parent graph must be acyclic.
  std::map<std::string, int> state;  // 0 new, 1 visiting, 2 done
  std::vector<std::string> stack;
  auto visit = [&](auto&& self, const std::string& v) -> void {
    int& s = state[v];
    if (s == 2) return;
    if (s == 1) throw std::invalid_argument("cycle through variable " + v);
    s = 1;
    for (const std::string& p : net.parents_of(v)) self(self, p);
    s = 2;
  };
  for (const VariableDecl& v : net.variables) visit(visit, v.name);
}

double Posterior::total() const {
  double sum = 0.0;
  for (const auto& [value, p] : explicit_values) sum += p;
  if (complement) sum += complement->total_mass;
  return sum;
}

// ---------------------------------------------------------------------------
// Elimination ordering

namespace {

using AdjacencyMap = std::map<std::string, std::set<std::string>>;

int fill_in_count(const AdjacencyMap& graph, const std::string& v) {
  const std::set<std::string>& nbrs = graph.at(v);
  int fill = 0;
  for (auto it = nbrs.begin(); it != nbrs.end(); ++it) {
    for (auto jt = std::next(it); jt != nbrs.end(); ++jt) {
      if (!graph.at(*it).count(*jt)) ++fill;
    }
  }
  return fill;
}

}  // namespace

std::vector<std::string> elimination_order(const Network& net,
                                           const std::optional<std::string>& query,
                                           const Assignment& evidence) {
  if (query && evidence.count(*query)) {
    throw std::invalid_argument("query variable " + *query + " is observed");
  }
  // Moral graph over unobserved variables: clique per CPD scope.
  AdjacencyMap graph;
  for (const VariableDecl& v : net.variables) {
    if (!evidence.count(v.name)) graph[v.name];
  }
  for (const auto& [child, cpd] : net.cpds) {
    std::vector<std::string> present;
    for (const std::string& v : cpd.scope) {
      if (graph.count(v)) present.push_back(v);
    }
    for (std::size_t i = 0; i < present.size(); ++i) {
      for (std::size_t j = i + 1; j < present.size(); ++j) {
        graph[present[i]].insert(present[j]);
        graph[present[j]].insert(present[i]);
      }
    }
  }

  std::set<std::string> pending;
  for (const auto& [v, nbrs] : graph) {
    if (!query || v != *query) pending.insert(v);
  }

  std::vector<std::string> order;
  while (!pending.empty()) {
    // Large variables go first; min-fill breaks ties within each class,
    // names break the rest.
    std::string best;
    bool best_large = false;
    int best_fill = 0;
    for (const std::string& v : pending) {
      bool is_large = net.variable(v).domain.is_large();
      int fill = fill_in_count(graph, v);
      bool better;
      if (best.empty()) {
        better = true;
      } else if (is_large != best_large) {
        better = is_large;
      } else if (fill != best_fill) {
        better = fill < best_fill;
      } else {
        better = v < best;
      }
      if (better) {
        best = v;
        best_large = is_large;
        best_fill = fill;
      }
    }
    order.push_back(best);
    pending.erase(best);
    // Connect the eliminated variable's neighbors.
    std::set<std::string> nbrs = graph.at(best);
    for (const std::string& a : nbrs) graph.at(a).erase(best);
    for (auto it = nbrs.begin(); it != nbrs.end(); ++it) {
      for (auto jt = std::next(it); jt != nbrs.end(); ++jt) {
        graph.at(*it).insert(*jt);
        graph.at(*jt).insert(*it);
      }
    }
    graph.erase(best);
  }
  return order;
}

// ---------------------------------------------------------------------------
// Variable elimination pipeline

namespace {

// Conditions all factors on the evidence, eliminates every variable in
// `order`, and multiplies what remains into one factor.
Factor run_elimination(const Network& net, const Assignment& evidence,
                       const std::optional<std::string>& query,
                       const std::vector<std::string>& order,
                       const EvalEnv& env, std::vector<SumOutTrace>* traces) {
  std::map<std::string, Factor> by_child;
  for (const VariableDecl& v : net.variables) {
    Factor f = net.cpds.at(v.name);
    for (const auto& [var, value] : evidence) {
      if (std::binary_search(f.scope.begin(), f.scope.end(), var)) {
        f = condition(f, var, value, env);
      }
    }
    by_child.emplace(v.name, std::move(f));
  }

  // Barren variables: hidden, not queried, and mentioned only by their own
  // CPD. That CPD sums to one over the variable, so it is dropped outright
  // rather than summed. Dropping can make an ancestor barren in turn.
  bool dropped = true;
  while (dropped) {
    dropped = false;
    for (auto it = by_child.begin(); it != by_child.end(); ++it) {
      const std::string& v = it->first;
      if (evidence.count(v) || (query && v == *query)) continue;
      bool mentioned_elsewhere = false;
      for (const auto& [other, f] : by_child) {
        if (other != v &&
            std::binary_search(f.scope.begin(), f.scope.end(), v)) {
          mentioned_elsewhere = true;
          break;
        }
      }
      if (!mentioned_elsewhere &&
          std::binary_search(it->second.scope.begin(), it->second.scope.end(),
                             v)) {
        by_child.erase(it);
        dropped = true;
        break;
      }
    }
  }

  std::vector<Factor> factors;
  factors.reserve(by_child.size());
  for (auto& [child, f] : by_child) factors.push_back(std::move(f));

  for (const std::string& z : order) {
    std::vector<Factor> involved;
    std::vector<Factor> remaining;
    for (Factor& f : factors) {
      if (std::binary_search(f.scope.begin(), f.scope.end(), z)) {
        involved.push_back(std::move(f));
      } else {
        remaining.push_back(std::move(f));
      }
    }
    if (involved.empty()) {
      factors = std::move(remaining);
      continue;
    }
    Factor product = multiply(involved, env);
    Factor summed;
    if (env.variable(z).domain.is_large()) {
      SumOutTrace trace;
      summed = sum_out_large(product, z, env, traces ? &trace : nullptr);
      if (traces) traces->push_back(std::move(trace));
    } else {
      summed = sum_out_small(product, z, env);
    }
    remaining.push_back(std::move(summed));
    factors = std::move(remaining);
  }
  return multiply(factors, env);
}

void check_evidence(const Network& net, const Assignment& evidence) {
  for (const auto& [var, value] : evidence) {
    const VariableDecl& decl = net.variable(var);
    std::string v = decl.domain.is_large() ? normalize_name(value) : value;
    if (!decl.domain.contains(v)) {
      throw std::invalid_argument("evidence value " + value +
                                  " outside domain of " + var);
    }
  }
}

std::vector<std::string> resolve_order(const Network& net,
                                       const std::optional<std::string>& query,
                                       const Assignment& evidence,
                                       const QueryOptions& opts) {
  if (opts.order.empty()) return elimination_order(net, query, evidence);
  // A user-supplied order must cover exactly the hidden non-query variables.
  std::set<std::string> expected;
  for (const VariableDecl& v : net.variables) {
    if (!evidence.count(v.name) && (!query || v.name != *query)) {
      expected.insert(v.name);
    }
  }
  std::set<std::string> given(opts.order.begin(), opts.order.end());
  if (given.size() != opts.order.size()) {
    throw std::invalid_argument("elimination order repeats a variable");
  }
  if (given != expected) {
    throw std::invalid_argument(
        "elimination order must list exactly the unobserved non-query variables");
  }
  return opts.order;
}

// Collects (constraint set, label) pairs for every root-to-leaf path of a
// factor whose scope is a single large variable.
void collect_large_paths(const NodePtr& node, const std::string& y,
                         ConstraintSet ctx,
                         std::vector<std::pair<ConstraintSet, LabelPtr>>& out) {
  switch (node->kind) {
    case TreeNode::Kind::Leaf:
      out.emplace_back(std::move(ctx), node->label);
      return;
    case TreeNode::Kind::SmallSplit:
      throw std::logic_error("small split in single-large-variable factor");
    case TreeNode::Kind::PredSplit: {
      ConstraintSet yes_ctx = ctx;
      ConstraintSet no_ctx = std::move(ctx);
      if (add_literal(yes_ctx, Literal{node->atom, true})) {
        collect_large_paths(node->yes, y, std::move(yes_ctx), out);
      }
      if (add_literal(no_ctx, Literal{node->atom, false})) {
        collect_large_paths(node->no, y, std::move(no_ctx), out);
      }
      return;
    }
  }
}

Posterior large_posterior(const Factor& final_factor, const std::string& y,
                          const EvalEnv& env) {
  const TableRegistry& tables = *env.tables;
  Posterior post;
  post.variable = y;

  ConstraintSet root_ctx;
  root_ctx.subject = y;
  std::vector<std::pair<ConstraintSet, LabelPtr>> paths;
  collect_large_paths(final_factor.root, y, std::move(root_ctx), paths);

  std::optional<PosteriorComplement> complement;
  for (auto& [ctx, label] : paths) {
    if (label_is_zero(*label)) continue;
    SolutionSet sol = solve(ctx, tables, *env.alphabet);
    if (sol.kind == SolutionSet::Kind::Explicit) {
      for (const std::string& value : sol.values) {
        Assignment a{{y, value}};
        double mass = eval_label(*label, a, env);
        if (mass != 0.0) post.explicit_values[value] += mass;
      }
      continue;
    }

    // Complement path: the values the label can distinguish (entries of the
    // tables it references) become explicit entries; the remainder is one
    // uniform block.
    ComplementBreakdown breakdown =
        complement_breakdown(*label, y, sol, tables, *env.alphabet);
    if (!breakdown.closed_form) {
      throw InferenceError("posterior of " + y +
                           " has a non-uniform complement block");
    }
    for (const auto& [value, mass] : breakdown.entry_masses) {
      if (mass != 0.0) post.explicit_values[value] += mass;
    }
    if (breakdown.remaining.unbounded) {
      if (breakdown.per_value != 0.0) {
        throw InferenceError("posterior of " + y +
                             " puts positive mass on an unbounded set");
      }
      continue;
    }
    PosteriorComplement block;
    block.description = ctx;
    block.count = breakdown.remaining;
    block.per_value = breakdown.per_value;
    block.total_mass =
        breakdown.per_value * static_cast<double>(breakdown.remaining.count);
    if (block.count.count == 0 || block.per_value == 0.0) continue;
    if (complement) {
      // Structurally a pruned predicate tree has one all-negative path, so a
      // second block can only mean the factor was malformed.
      throw InferenceError("posterior of " + y +
                           " has multiple complement blocks");
    }
    complement = std::move(block);
  }

  double z = 0.0;
  for (const auto& [value, mass] : post.explicit_values) z += mass;
  if (complement) z += complement->total_mass;
  if (!(z > 0.0)) throw InferenceError("evidence has probability zero");

  for (auto& [value, mass] : post.explicit_values) mass /= z;
  if (complement) {
    complement->per_value /= z;
    complement->total_mass /= z;
    post.complement = std::move(complement);
  }
  return post;
}

void check_normalized(const Posterior& post) {
  double total = post.total();
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::logic_error("posterior of " + post.variable +
                           " normalizes to " + std::to_string(total));
  }
}

}  // namespace

Posterior posterior(const Network& net, const Assignment& evidence,
                    const std::string& query, const QueryOptions& opts) {
  const VariableDecl& qdecl = net.variable(query);
  if (evidence.count(query)) {
    throw std::invalid_argument("query variable " + query + " is observed");
  }
  check_evidence(net, evidence);
  auto index = net.variable_index();
  EvalEnv env = net.env(index);
  std::vector<std::string> order = resolve_order(net, query, evidence, opts);
  Factor final_factor = run_elimination(net, evidence, query, order, env, opts.traces);

  if (qdecl.domain.is_large()) {
    Posterior post = large_posterior(final_factor, query, env);
    check_normalized(post);
    return post;
  }

  Posterior post;
  post.variable = query;
  double z = 0.0;
  for (const std::string& value : qdecl.domain.values) {
    Assignment a{{query, value}};
    double mass = evaluate(final_factor, a, env);
    post.explicit_values[value] = mass;
    z += mass;
  }
  if (!(z > 0.0)) throw InferenceError("evidence has probability zero");
  for (auto& [value, mass] : post.explicit_values) mass /= z;
  check_normalized(post);
  return post;
}

double evidence_likelihood(const Network& net, const Assignment& evidence,
                           const QueryOptions& opts) {
  if (evidence.empty()) {
    throw std::invalid_argument("evidence_likelihood needs nonempty evidence");
  }
  check_evidence(net, evidence);
  auto index = net.variable_index();
  EvalEnv env = net.env(index);
  std::vector<std::string> order =
      resolve_order(net, std::nullopt, evidence, opts);
  Factor final_factor = run_elimination(net, evidence, std::nullopt, order, env, opts.traces);
  return evaluate(final_factor, {}, env);
}

double posterior_probability_of(const Posterior& p, const std::string& value) {
  auto it = p.explicit_values.find(value);
  if (it != p.explicit_values.end()) return it->second;
  return p.complement ? p.complement->per_value : 0.0;
}

double total_variation(const Posterior& a, const Posterior& b,
                       const std::vector<std::string>& universe) {
  double sum = 0.0;
  for (const std::string& v : universe) {
    sum += std::abs(posterior_probability_of(a, v) -
                    posterior_probability_of(b, v));
  }
  return 0.5 * sum;
}

}  // namespace ldve
