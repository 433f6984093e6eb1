#include "ldve/sum_out.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ldve {

// ---------------------------------------------------------------------------
// Small variables

namespace {

NodePtr sum_small_walk(const NodePtr& node, const std::string& y,
                       const std::set<std::string>& allowed, const EvalEnv& env) {
  switch (node->kind) {
    case TreeNode::Kind::Leaf: {
      double n = static_cast<double>(allowed.size());
      return leaf(label_product({label_const(n), node->label}));
    }
    case TreeNode::Kind::SmallSplit: {
      if (node->variable != y) {
        std::vector<SmallBranch> branches;
        for (const SmallBranch& b : node->branches) {
          branches.push_back({b.values, sum_small_walk(b.child, y, allowed, env)});
        }
        NodePtr otherwise =
            node->otherwise ? sum_small_walk(node->otherwise, y, allowed, env)
                            : nullptr;
        return small_split(node->variable, std::move(branches), std::move(otherwise));
      }
      std::vector<NodePtr> parts;
      std::set<std::string> covered;
      for (const SmallBranch& b : node->branches) {
        std::set<std::string> eff;
        for (const std::string& v : b.values) {
          if (allowed.count(v)) eff.insert(v);
        }
        covered.insert(b.values.begin(), b.values.end());
        if (eff.empty()) continue;
        parts.push_back(sum_small_walk(b.child, y, eff, env));
      }
      if (node->otherwise) {
        std::set<std::string> rest;
        for (const std::string& v : allowed) {
          if (!covered.count(v)) rest.insert(v);
        }
        if (!rest.empty()) {
          parts.push_back(sum_small_walk(node->otherwise, y, rest, env));
        }
      }
      if (parts.empty()) return leaf(0.0);
      return merge(parts, MergeOp::Add, env);
    }
    case TreeNode::Kind::PredSplit:
      return pred_split(node->atom, sum_small_walk(node->yes, y, allowed, env),
                        sum_small_walk(node->no, y, allowed, env));
  }
  throw std::logic_error("unreachable node kind");
}

}  // namespace

Factor sum_out_small(const Factor& f, const std::string& y, const EvalEnv& env) {
  if (!std::binary_search(f.scope.begin(), f.scope.end(), y)) {
    throw std::invalid_argument("sum_out_small: " + y + " not in scope");
  }
  const VariableDecl& decl = env.variable(y);
  if (!decl.domain.is_small()) {
    throw std::invalid_argument("sum_out_small on large variable " + y);
  }
  std::set<std::string> full(decl.domain.values.begin(),
                             decl.domain.values.end());
  NodePtr root = prune_node(sum_small_walk(f.root, y, full, env), Context{}, env);
  std::vector<std::string> scope;
  for (const std::string& v : f.scope) {
    if (v != y) scope.push_back(v);
  }
  return Factor{std::move(scope), std::move(root)};
}

// ---------------------------------------------------------------------------
// Leaf masses

namespace {

// Splits a product label into the factors that mention `y` and the rest.
void split_label(const LabelPtr& label, const std::string& y,
                 std::vector<LabelPtr>& on_y, std::vector<LabelPtr>& rest) {
  if (label->kind == LabelExpr::Kind::Product) {
    for (const LabelPtr& p : label->parts) split_label(p, y, on_y, rest);
    return;
  }
  (label_mentions(*label, y) ? on_y : rest).push_back(label);
}

// Tables the label reads the summed variable through, and whether anything
// else in the label depends on it (which defeats the closed form).
void label_y_dependence(const LabelExpr& label, const std::string& y,
                        std::set<std::string>& tables, bool& opaque) {
  switch (label.kind) {
    case LabelExpr::Kind::Const:
    case LabelExpr::Kind::PNew:
      return;
    case LabelExpr::Kind::PrSing:
      if (label.term.is_variable && label.term.text == y) opaque = true;
      return;
    case LabelExpr::Kind::TablePdf:
      if (label.variable == y) tables.insert(label.table_id);
      return;
    case LabelExpr::Kind::Product:
    case LabelExpr::Kind::Sum:
      for (const LabelPtr& p : label.parts) {
        label_y_dependence(*p, y, tables, opaque);
      }
      return;
  }
}

// Evaluates the label at a generic value outside every table it references.
double eval_label_unseen(const LabelExpr& label, const std::string& y,
                         const TableRegistry& tables, const Alphabet& alphabet) {
  EvalEnv env{nullptr, &tables, &alphabet};
  switch (label.kind) {
    case LabelExpr::Kind::Const:
    case LabelExpr::Kind::PNew:
      return eval_label(label, {}, env);
    case LabelExpr::Kind::PrSing:
      if (label.term.is_variable) {
        throw std::invalid_argument("prsing of " + label.term.text +
                                    " has no uniform complement value");
      }
      return eval_label(label, {}, env);
    case LabelExpr::Kind::TablePdf: {
      auto it = tables.find(label.table_id);
      if (it == tables.end()) {
        throw std::invalid_argument("unknown table: " + label.table_id);
      }
      return it->second.pnew;
    }
    case LabelExpr::Kind::Product: {
      double out = 1.0;
      for (const LabelPtr& p : label.parts) {
        out *= eval_label_unseen(*p, y, tables, alphabet);
      }
      return out;
    }
    case LabelExpr::Kind::Sum: {
      double out = 0.0;
      for (const LabelPtr& p : label.parts) {
        out += eval_label_unseen(*p, y, tables, alphabet);
      }
      return out;
    }
  }
  throw std::logic_error("unreachable label kind");
}

}  // namespace

ComplementBreakdown complement_breakdown(const LabelExpr& label,
                                         const std::string& y,
                                         const SolutionSet& sol,
                                         const TableRegistry& tables,
                                         const Alphabet& alphabet) {
  ComplementBreakdown out;
  if (sol.kind != SolutionSet::Kind::Complement) {
    throw std::invalid_argument("complement_breakdown needs a complement set");
  }

  std::set<std::string> label_tables;
  bool opaque = false;
  label_y_dependence(label, y, label_tables, opaque);
  if (opaque) {
    out.closed_form = false;
    return out;
  }

  std::set<std::string> excluded(sol.excluded_in_table.begin(),
                                 sol.excluded_in_table.end());
  excluded.insert(sol.excluded_unseen.begin(), sol.excluded_unseen.end());

  // Values the label can tell apart: entries of any table it references.
  // Everything else in the solution set gets the same per-value mass.
  std::set<std::string> distinguished;
  for (const std::string& id : label_tables) {
    auto it = tables.find(id);
    if (it == tables.end()) throw std::invalid_argument("unknown table: " + id);
    for (const auto& [name, p] : it->second.entries) distinguished.insert(name);
  }
  EvalEnv env{nullptr, &tables, &alphabet};
  for (const std::string& v : distinguished) {
    if (excluded.count(v)) continue;
    out.entry_masses[v] = eval_label(label, {{y, v}}, env);
  }
  out.per_value = eval_label_unseen(label, y, tables, alphabet);

  // The remainder is counted within one table's closed model: the solve
  // base when the context named a table, else the first label table. With
  // neither, the remainder is the whole string domain minus finitely many
  // values, which is unbounded.
  std::optional<std::string> base = sol.base_table;
  if (!base && !label_tables.empty()) base = *label_tables.begin();
  if (!base) {
    out.remaining = Cardinality::infinite();
    return out;
  }
  const NameTable& bt = tables.at(*base);
  if (bt.n_unseen.unbounded) {
    out.remaining = Cardinality::infinite();
    return out;
  }
  // |solution| within the base closure, minus the distinguished values that
  // the solution still contains.
  std::uint64_t excl_in_base = 0, excl_outside = 0;
  for (const std::string& v : excluded) {
    (bt.entries.count(v) ? excl_in_base : excl_outside)++;
  }
  if (excl_outside > bt.n_unseen.count) {
    throw std::invalid_argument(
        "complement excludes more unseen values than table " + bt.id +
        " models");
  }
  std::uint64_t count = (bt.entries.size() - excl_in_base) +
                        (bt.n_unseen.count - excl_outside);
  if (out.entry_masses.size() > count) {
    throw std::invalid_argument("table models of " + bt.id +
                                " and the label tables are inconsistent");
  }
  out.remaining = Cardinality::of(count - out.entry_masses.size());
  return out;
}

MassResult leaf_mass(const LabelPtr& label, const ConstraintSet& ctx,
                     const TableRegistry& tables, const Alphabet& alphabet,
                     LeafMassRecord* record) {
  const std::string& y = ctx.subject;
  if (record) {
    record->context = ctx;
    record->counted = false;
  }

  // Sums distribute over the summed variable.
  if (label->kind == LabelExpr::Kind::Sum) {
    double total = 0.0;
    for (const LabelPtr& part : label->parts) {
      MassResult m = leaf_mass(part, ctx, tables, alphabet);
      if (m.unbounded) return MassResult::infinite();
      total += m.value;
    }
    if (record) record->mass = total;
    return MassResult::of(total);
  }

  std::vector<LabelPtr> on_y, rest;
  split_label(label, y, on_y, rest);

  EvalEnv env{nullptr, &tables, &alphabet};
  double constant = 1.0;
  for (const LabelPtr& p : rest) {
    // The label must be ground except for y; anything else is caller error.
    if (!label_variables(*p).empty()) {
      throw std::invalid_argument("leaf label mentions a variable besides " + y +
                                  ": " + label_to_string(*p));
    }
    constant *= eval_label(*p, {}, env);
  }

  // Zero annihilates any count, bounded or not.
  if (constant == 0.0) {
    if (record) record->mass = 0.0;
    return MassResult::of(0.0);
  }

  SolutionSet sol = solve(ctx, tables, alphabet);

  if (on_y.empty()) {
    Cardinality n = solution_count(sol, tables);
    if (record) {
      record->solutions = n;
      record->counted = true;
    }
    if (n.unbounded) return MassResult::infinite();
    double mass = constant * static_cast<double>(n.count);
    if (record) record->mass = mass;
    return MassResult::of(mass);
  }

  if (sol.kind == SolutionSet::Kind::Explicit) {
    if (record) {
      record->solutions = Cardinality::of(sol.values.size());
      record->counted = true;
    }
    double total = 0.0;
    for (const std::string& value : sol.values) {
      Assignment a{{y, value}};
      double per = constant;
      for (const LabelPtr& p : on_y) per *= eval_label(*p, a, env);
      total += per;
    }
    if (record) record->mass = total;
    return MassResult::of(total);
  }

  // Complement solution: closed form via the breakdown into finitely many
  // table-entry values plus a uniform remainder.
  LabelPtr y_label = label_product(on_y);
  ComplementBreakdown breakdown =
      complement_breakdown(*y_label, y, sol, tables, alphabet);
  if (!breakdown.closed_form) return MassResult::infinite();
  if (breakdown.remaining.unbounded && breakdown.per_value != 0.0) {
    return MassResult::infinite();
  }
  double mass = 0.0;
  for (const auto& [value, m] : breakdown.entry_masses) mass += m;
  if (!breakdown.remaining.unbounded) {
    mass += breakdown.per_value * static_cast<double>(breakdown.remaining.count);
  }
  mass *= constant;
  if (record) {
    if (!breakdown.remaining.unbounded) {
      record->solutions = Cardinality::of(breakdown.entry_masses.size() +
                                          breakdown.remaining.count);
    } else {
      record->solutions = Cardinality::infinite();
    }
    record->counted = true;
    record->mass = mass;
  }
  return MassResult::of(mass);
}

// ---------------------------------------------------------------------------
// Large variables

namespace {

std::string context_to_string(const ConstraintSet& ctx) {
  std::string out;
  for (std::size_t i = 0; i < ctx.literals.size(); ++i) {
    if (i) out += " & ";
    out += literal_to_string(ctx.literals[i]);
  }
  return out.empty() ? "(unconstrained)" : out;
}

NodePtr sum_large_walk(const NodePtr& node, const std::string& y,
                       const ConstraintSet& ctx, const EvalEnv& env,
                       SumOutTrace* trace) {
  switch (node->kind) {
    case TreeNode::Kind::Leaf: {
      // A zero leaf has zero mass whatever the context counts to.
      if (label_is_zero(*node->label)) {
        if (trace) {
          LeafMassRecord record;
          record.context = ctx;
          record.mass = 0.0;
          trace->leaves.push_back(record);
        }
        return leaf(0.0);
      }
      std::vector<LabelPtr> on_y, rest;
      split_label(node->label, y, on_y, rest);
      LabelPtr y_part = label_product(on_y);
      LeafMassRecord record;
      MassResult mass =
          leaf_mass(y_part, ctx, *env.tables, *env.alphabet, &record);
      if (mass.unbounded) {
        throw InferenceError("unbounded mass at leaf; context on " + y + ": " +
                             context_to_string(ctx));
      }
      if (trace) {
        // Fold the ground remaining factors into the recorded mass so the
        // trace shows the leaf's full contribution, not just the y-part.
        for (const LabelPtr& p : rest) {
          if (label_variables(*p).empty()) {
            record.mass *= eval_label(*p, {}, env);
          }
        }
        trace->leaves.push_back(record);
      }
      std::vector<LabelPtr> parts = std::move(rest);
      parts.push_back(label_const(mass.value));
      return leaf(label_product(std::move(parts)));
    }
    case TreeNode::Kind::SmallSplit: {
      std::vector<SmallBranch> branches;
      for (const SmallBranch& b : node->branches) {
        branches.push_back({b.values, sum_large_walk(b.child, y, ctx, env, trace)});
      }
      NodePtr otherwise = node->otherwise
                              ? sum_large_walk(node->otherwise, y, ctx, env, trace)
                              : nullptr;
      return small_split(node->variable, std::move(branches), std::move(otherwise));
    }
    case TreeNode::Kind::PredSplit: {
      if (!atom_mentions(node->atom, y)) {
        return pred_split(node->atom,
                          sum_large_walk(node->yes, y, ctx, env, trace),
                          sum_large_walk(node->no, y, ctx, env, trace));
      }
      for (const std::string& v : atom_variables(node->atom)) {
        if (v != y) {
          throw InferenceError(
              "cannot sum out " + y + ": predicate " +
              atom_to_string(node->atom) + " still mentions variable " + v +
              "; eliminate or observe it first");
        }
      }
      ConstraintSet yes_ctx = ctx;
      ConstraintSet no_ctx = ctx;
      bool yes_ok = add_literal(yes_ctx, Literal{node->atom, true});
      bool no_ok = add_literal(no_ctx, Literal{node->atom, false});
      // A contradictory branch contributes no y-values; recurse only into the
      // consistent side.
      if (!yes_ok) return sum_large_walk(node->no, y, no_ctx, env, trace);
      if (!no_ok) return sum_large_walk(node->yes, y, yes_ctx, env, trace);
      std::vector<NodePtr> parts;
      parts.push_back(sum_large_walk(node->yes, y, yes_ctx, env, trace));
      parts.push_back(sum_large_walk(node->no, y, no_ctx, env, trace));
      return merge(parts, MergeOp::Add, env);
    }
  }
  throw std::logic_error("unreachable node kind");
}

}  // namespace

Factor sum_out_large(const Factor& f, const std::string& y, const EvalEnv& env,
                     SumOutTrace* trace) {
  if (!std::binary_search(f.scope.begin(), f.scope.end(), y)) {
    throw std::invalid_argument("sum_out_large: " + y + " not in scope");
  }
  if (!env.variable(y).domain.is_large()) {
    throw std::invalid_argument("sum_out_large on small variable " + y);
  }
  if (trace) trace->variable = y;
  ConstraintSet empty;
  empty.subject = y;
  NodePtr root =
      prune_node(sum_large_walk(f.root, y, empty, env, trace), Context{}, env);
  std::vector<std::string> scope;
  for (const std::string& v : f.scope) {
    if (v != y) scope.push_back(v);
  }
  return Factor{std::move(scope), std::move(root)};
}

}  // namespace ldve
