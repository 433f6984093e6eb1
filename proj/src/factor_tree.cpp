#include "ldve/factor_tree.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace ldve {

const VariableDecl& EvalEnv::variable(const std::string& name) const {
  auto it = variables->find(name);
  if (it == variables->end()) {
    throw std::invalid_argument("unknown variable: " + name);
  }
  return it->second;
}

const NameTable& EvalEnv::table(const std::string& id) const {
  auto it = tables->find(id);
  if (it == tables->end()) {
    throw std::invalid_argument("unknown table: " + id);
  }
  return it->second;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Labels

LabelPtr label_const(double value) {
  if (value < 0.0) throw std::invalid_argument("negative leaf label");
  auto l = std::make_shared<LabelExpr>();
  l->kind = LabelExpr::Kind::Const;
  l->value = value;
  return l;
}

LabelPtr label_prsing(Term term) {
  auto l = std::make_shared<LabelExpr>();
  l->kind = LabelExpr::Kind::PrSing;
  l->term = std::move(term);
  return l;
}

LabelPtr label_table_pdf(std::string variable, std::string table_id) {
  auto l = std::make_shared<LabelExpr>();
  l->kind = LabelExpr::Kind::TablePdf;
  l->variable = std::move(variable);
  l->table_id = std::move(table_id);
  return l;
}

LabelPtr label_pnew(std::string table_id) {
  auto l = std::make_shared<LabelExpr>();
  l->kind = LabelExpr::Kind::PNew;
  l->table_id = std::move(table_id);
  return l;
}

LabelPtr label_product(std::vector<LabelPtr> parts) {
  std::vector<LabelPtr> flat;
  double constant = 1.0;
  bool saw_const = false;
  for (const LabelPtr& p : parts) {
    if (!p) throw std::invalid_argument("null label in product");
    if (p->kind == LabelExpr::Kind::Const) {
      constant *= p->value;
      saw_const = true;
    } else if (p->kind == LabelExpr::Kind::Product) {
      for (const LabelPtr& q : p->parts) {
        if (q->kind == LabelExpr::Kind::Const) {
          constant *= q->value;
          saw_const = true;
        } else {
          flat.push_back(q);
        }
      }
    } else {
      flat.push_back(p);
    }
  }
  if (constant == 0.0) return label_const(0.0);
  if (flat.empty()) return label_const(saw_const ? constant : 1.0);
  if (saw_const && constant != 1.0) {
    flat.insert(flat.begin(), label_const(constant));
  }
  if (flat.size() == 1) return flat.front();
  auto l = std::make_shared<LabelExpr>();
  l->kind = LabelExpr::Kind::Product;
  l->parts = std::move(flat);
  return l;
}

LabelPtr label_sum(std::vector<LabelPtr> parts) {
  std::vector<LabelPtr> flat;
  double constant = 0.0;
  bool saw_const = false;
  for (const LabelPtr& p : parts) {
    if (!p) throw std::invalid_argument("null label in sum");
    if (p->kind == LabelExpr::Kind::Const) {
      constant += p->value;
      saw_const = true;
    } else if (p->kind == LabelExpr::Kind::Sum) {
      for (const LabelPtr& q : p->parts) {
        if (q->kind == LabelExpr::Kind::Const) {
          constant += q->value;
          saw_const = true;
        } else {
          flat.push_back(q);
        }
      }
    } else {
      flat.push_back(p);
    }
  }
  if (flat.empty()) return label_const(constant);
  if (saw_const && constant != 0.0) flat.push_back(label_const(constant));
  if (flat.size() == 1) return flat.front();
  auto l = std::make_shared<LabelExpr>();
  l->kind = LabelExpr::Kind::Sum;
  l->parts = std::move(flat);
  return l;
}

bool label_is_zero(const LabelExpr& label) {
  return label.kind == LabelExpr::Kind::Const && label.value == 0.0;
}

bool label_mentions(const LabelExpr& label, const std::string& var) {
  switch (label.kind) {
    case LabelExpr::Kind::Const:
    case LabelExpr::Kind::PNew:
      return false;
    case LabelExpr::Kind::PrSing:
      return label.term.is_variable && label.term.text == var;
    case LabelExpr::Kind::TablePdf:
      return label.variable == var;
    case LabelExpr::Kind::Product:
    case LabelExpr::Kind::Sum:
      for (const LabelPtr& p : label.parts) {
        if (label_mentions(*p, var)) return true;
      }
      return false;
  }
  return false;
}

std::vector<std::string> label_variables(const LabelExpr& label) {
  std::vector<std::string> vars;
  switch (label.kind) {
    case LabelExpr::Kind::Const:
    case LabelExpr::Kind::PNew:
      break;
    case LabelExpr::Kind::PrSing:
      if (label.term.is_variable) vars.push_back(label.term.text);
      break;
    case LabelExpr::Kind::TablePdf:
      vars.push_back(label.variable);
      break;
    case LabelExpr::Kind::Product:
    case LabelExpr::Kind::Sum:
      for (const LabelPtr& p : label.parts) {
        for (std::string& v : label_variables(*p)) vars.push_back(std::move(v));
      }
      break;
  }
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

double eval_label(const LabelExpr& label, const Assignment& assignment,
                  const EvalEnv& env) {
  switch (label.kind) {
    case LabelExpr::Kind::Const:
      return label.value;
    case LabelExpr::Kind::PrSing: {
      std::string word;
      if (label.term.is_variable) {
        auto it = assignment.find(label.term.text);
        if (it == assignment.end()) {
          throw std::invalid_argument("prsing of unassigned variable " +
                                      label.term.text);
        }
        word = normalize_name(it->second);
      } else {
        word = label.term.text;
      }
      if (word.empty()) throw std::invalid_argument("prsing of empty word");
      return 1.0 / (static_cast<double>(env.alphabet->size() - 1) *
                    static_cast<double>(word.size()));
    }
    case LabelExpr::Kind::TablePdf: {
      auto it = assignment.find(label.variable);
      if (it == assignment.end()) {
        throw std::invalid_argument("table pdf of unassigned variable " +
                                    label.variable);
      }
      const NameTable& t = env.table(label.table_id);
      std::optional<double> p = table_lookup(t, it->second);
      return p ? *p : t.pnew;
    }
    case LabelExpr::Kind::PNew:
      return env.table(label.table_id).pnew;
    case LabelExpr::Kind::Product: {
      double out = 1.0;
      for (const LabelPtr& p : label.parts) out *= eval_label(*p, assignment, env);
      return out;
    }
    case LabelExpr::Kind::Sum: {
      double out = 0.0;
      for (const LabelPtr& p : label.parts) out += eval_label(*p, assignment, env);
      return out;
    }
  }
  throw std::logic_error("unreachable label kind");
}

// ---------------------------------------------------------------------------
// Nodes and factors

NodePtr leaf(LabelPtr label) {
  auto n = std::make_shared<TreeNode>();
  n->kind = TreeNode::Kind::Leaf;
  n->label = std::move(label);
  return n;
}

NodePtr leaf(double value) { return leaf(label_const(value)); }

NodePtr small_split(std::string variable, std::vector<SmallBranch> branches,
                    NodePtr otherwise) {
  auto n = std::make_shared<TreeNode>();
  n->kind = TreeNode::Kind::SmallSplit;
  n->variable = std::move(variable);
  n->branches = std::move(branches);
  n->otherwise = std::move(otherwise);
  return n;
}

NodePtr pred_split(Atom atom, NodePtr yes, NodePtr no) {
  auto n = std::make_shared<TreeNode>();
  n->kind = TreeNode::Kind::PredSplit;
  n->atom = std::move(atom);
  n->yes = std::move(yes);
  n->no = std::move(no);
  return n;
}

Factor make_factor(std::vector<std::string> scope, NodePtr root) {
  std::sort(scope.begin(), scope.end());
  scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
  return Factor{std::move(scope), std::move(root)};
}

namespace {

void collect_mentioned(const NodePtr& node, std::set<std::string>& vars) {
  if (!node) return;
  switch (node->kind) {
    case TreeNode::Kind::Leaf:
      for (const std::string& v : label_variables(*node->label)) vars.insert(v);
      return;
    case TreeNode::Kind::SmallSplit:
      vars.insert(node->variable);
      for (const SmallBranch& b : node->branches) collect_mentioned(b.child, vars);
      collect_mentioned(node->otherwise, vars);
      return;
    case TreeNode::Kind::PredSplit:
      for (const std::string& v : atom_variables(node->atom)) vars.insert(v);
      collect_mentioned(node->yes, vars);
      collect_mentioned(node->no, vars);
      return;
  }
}

void validate_node(const NodePtr& node, const EvalEnv& env) {
  if (!node) throw std::invalid_argument("null tree node");
  switch (node->kind) {
    case TreeNode::Kind::Leaf:
      if (!node->label) throw std::invalid_argument("leaf without label");
      return;
    case TreeNode::Kind::SmallSplit: {
      const VariableDecl& decl = env.variable(node->variable);
      if (!decl.domain.is_small()) {
        throw std::invalid_argument("split on non-small variable " + node->variable);
      }
      if (node->branches.empty() && !node->otherwise) {
        throw std::invalid_argument("empty split on " + node->variable);
      }
      std::set<std::string> seen;
      for (const SmallBranch& b : node->branches) {
        if (b.values.empty()) {
          throw std::invalid_argument("empty branch set on " + node->variable);
        }
        for (const std::string& v : b.values) {
          if (!decl.domain.contains(v)) {
            throw std::invalid_argument("branch value " + v +
                                        " outside domain of " + node->variable);
          }
          if (!seen.insert(v).second) {
            throw std::invalid_argument("branch sets on " + node->variable +
                                        " overlap at " + v);
          }
        }
        validate_node(b.child, env);
      }
      if (node->otherwise) validate_node(node->otherwise, env);
      return;
    }
    case TreeNode::Kind::PredSplit: {
      if (atom_variables(node->atom).empty()) {
        throw std::invalid_argument("predicate split on ground atom " +
                                    atom_to_string(node->atom));
      }
      validate_node(node->yes, env);
      validate_node(node->no, env);
      return;
    }
  }
}

}  // namespace

void validate_factor(const Factor& f, const EvalEnv& env) {
  validate_node(f.root, env);
  std::set<std::string> mentioned;
  collect_mentioned(f.root, mentioned);
  for (const std::string& v : mentioned) {
    env.variable(v);  // must be declared
    if (!std::binary_search(f.scope.begin(), f.scope.end(), v)) {
      throw std::invalid_argument("variable " + v + " used but not in scope");
    }
  }
}

// ---------------------------------------------------------------------------
// Context

std::set<std::string> Context::allowed(const std::string& var,
                                       const EvalEnv& env) const {
  auto it = small_allowed.find(var);
  if (it != small_allowed.end()) return it->second;
  const VariableDecl& decl = env.variable(var);
  return {decl.domain.values.begin(), decl.domain.values.end()};
}

Context Context::restrict_small(const std::string& var,
                                const std::set<std::string>& subset,
                                const EvalEnv& env) const {
  Context out = *this;
  const std::set<std::string>& current = allowed(var, env);
  std::set<std::string> next;
  std::set_intersection(current.begin(), current.end(), subset.begin(),
                        subset.end(), std::inserter(next, next.begin()));
  if (next.empty()) out.contradictory = true;
  out.small_allowed[var] = std::move(next);
  return out;
}

Context Context::with_literal(const std::string& var, const Literal& lit) const {
  Context out = *this;
  ConstraintSet& cs = out.large_literals[var];
  cs.subject = var;
  if (!add_literal(cs, lit)) out.contradictory = true;
  return out;
}

std::optional<bool> Context::decide(const Atom& atom) const {
  for (const std::string& var : atom_variables(atom)) {
    auto it = large_literals.find(var);
    if (it == large_literals.end()) continue;
    for (const Literal& lit : it->second.literals) {
      if (lit.atom == atom) return lit.positive;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Evaluation

double evaluate_node(const NodePtr& node, const Assignment& assignment,
                     const EvalEnv& env) {
  if (!node) throw std::invalid_argument("null tree node");
  switch (node->kind) {
    case TreeNode::Kind::Leaf:
      return eval_label(*node->label, assignment, env);
    case TreeNode::Kind::SmallSplit: {
      auto it = assignment.find(node->variable);
      if (it == assignment.end()) {
        throw std::invalid_argument("assignment missing variable " +
                                    node->variable);
      }
      for (const SmallBranch& b : node->branches) {
        if (std::find(b.values.begin(), b.values.end(), it->second) !=
            b.values.end()) {
          return evaluate_node(b.child, assignment, env);
        }
      }
      if (node->otherwise) return evaluate_node(node->otherwise, assignment, env);
      throw std::invalid_argument("no branch for " + node->variable + "=" +
                                  it->second);
    }
    case TreeNode::Kind::PredSplit:
      return eval_atom(node->atom, assignment, *env.tables)
                 ? evaluate_node(node->yes, assignment, env)
                 : evaluate_node(node->no, assignment, env);
  }
  throw std::logic_error("unreachable node kind");
}

double evaluate(const Factor& f, const Assignment& assignment,
                const EvalEnv& env) {
  for (const std::string& v : f.scope) {
    if (!assignment.count(v)) {
      throw std::invalid_argument("assignment missing scope variable " + v);
    }
  }
  return evaluate_node(f.root, assignment, env);
}

// ---------------------------------------------------------------------------
// Pruning

namespace {

std::string atom_subject_variable(const Atom& atom) {
  if (atom.subject.is_variable) return atom.subject.text;
  if ((atom.kind == AtomKind::Equal || atom.kind == AtomKind::SingleEdit) &&
      atom.argument.is_variable) {
    return atom.argument.text;
  }
  return {};
}

}  // namespace

NodePtr prune_node(const NodePtr& node, const Context& ctx, const EvalEnv& env) {
  if (!node) return node;
  switch (node->kind) {
    case TreeNode::Kind::Leaf:
      return node;
    case TreeNode::Kind::SmallSplit: {
      const std::set<std::string> allowed = ctx.allowed(node->variable, env);
      std::vector<SmallBranch> kept;
      std::set<std::string> covered;
      for (const SmallBranch& b : node->branches) {
        std::set<std::string> eff;
        for (const std::string& v : b.values) {
          if (allowed.count(v)) eff.insert(v);
        }
        covered.insert(b.values.begin(), b.values.end());
        if (eff.empty()) continue;
        Context sub = ctx.restrict_small(node->variable, eff, env);
        SmallBranch nb;
        nb.values.assign(eff.begin(), eff.end());
        nb.child = prune_node(b.child, sub, env);
        kept.push_back(std::move(nb));
      }
      NodePtr otherwise;
      std::set<std::string> rest;
      if (node->otherwise) {
        for (const std::string& v : allowed) {
          if (!covered.count(v)) rest.insert(v);
        }
        if (!rest.empty()) {
          Context sub = ctx.restrict_small(node->variable, rest, env);
          otherwise = prune_node(node->otherwise, sub, env);
        }
      }
      if (kept.empty() && otherwise) return otherwise;
      if (kept.size() == 1 && !otherwise) {
        const SmallBranch& only = kept.front();
        if (only.values.size() == allowed.size()) return only.child;
      }
      if (kept.empty() && !otherwise) {
        // Context-consistent assignments cannot reach this node with a value
        // the original tree covered; keep the (now unreachable) split as-is.
        return node;
      }
      return small_split(node->variable, std::move(kept), std::move(otherwise));
    }
    case TreeNode::Kind::PredSplit: {
      if (std::optional<bool> d = ctx.decide(node->atom)) {
        return prune_node(*d ? node->yes : node->no, ctx, env);
      }
      std::string subject = atom_subject_variable(node->atom);
      Context yes_ctx = ctx.with_literal(subject, Literal{node->atom, true});
      Context no_ctx = ctx.with_literal(subject, Literal{node->atom, false});
      if (yes_ctx.contradictory) return prune_node(node->no, no_ctx, env);
      if (no_ctx.contradictory) return prune_node(node->yes, yes_ctx, env);
      return pred_split(node->atom, prune_node(node->yes, yes_ctx, env),
                        prune_node(node->no, no_ctx, env));
    }
  }
  throw std::logic_error("unreachable node kind");
}

Factor prune(const Factor& f, const Context& ctx, const EvalEnv& env) {
  return Factor{f.scope, prune_node(f.root, ctx, env)};
}

// ---------------------------------------------------------------------------
// Merging

namespace {

LabelPtr combine_labels(const LabelPtr& a, const LabelPtr& b, MergeOp op) {
  if (op == MergeOp::Multiply) return label_product({a, b});
  return label_sum({a, b});
}

// Replaces each leaf of `graft` with op(base_label, leaf label).
NodePtr graft_leaves(const NodePtr& graft, const LabelPtr& base_label,
                     MergeOp op) {
  switch (graft->kind) {
    case TreeNode::Kind::Leaf:
      return leaf(combine_labels(base_label, graft->label, op));
    case TreeNode::Kind::SmallSplit: {
      std::vector<SmallBranch> branches;
      branches.reserve(graft->branches.size());
      for (const SmallBranch& b : graft->branches) {
        branches.push_back({b.values, graft_leaves(b.child, base_label, op)});
      }
      NodePtr otherwise = graft->otherwise
                              ? graft_leaves(graft->otherwise, base_label, op)
                              : nullptr;
      return small_split(graft->variable, std::move(branches), std::move(otherwise));
    }
    case TreeNode::Kind::PredSplit:
      return pred_split(graft->atom, graft_leaves(graft->yes, base_label, op),
                        graft_leaves(graft->no, base_label, op));
  }
  throw std::logic_error("unreachable node kind");
}

NodePtr merge2_walk(const NodePtr& t1, const NodePtr& t2, MergeOp op,
                    const Context& ctx, const EvalEnv& env) {
  switch (t1->kind) {
    case TreeNode::Kind::Leaf: {
      // A zero leaf annihilates the product; the second tree is not grafted.
      if (op == MergeOp::Multiply && label_is_zero(*t1->label)) return t1;
      NodePtr pruned = prune_node(t2, ctx, env);
      return graft_leaves(pruned, t1->label, op);
    }
    case TreeNode::Kind::SmallSplit: {
      const std::set<std::string> allowed = ctx.allowed(t1->variable, env);
      std::vector<SmallBranch> branches;
      std::set<std::string> covered;
      for (const SmallBranch& b : t1->branches) {
        std::set<std::string> eff;
        for (const std::string& v : b.values) {
          if (allowed.count(v)) eff.insert(v);
        }
        covered.insert(b.values.begin(), b.values.end());
        if (eff.empty()) continue;
        Context sub = ctx.restrict_small(t1->variable, eff, env);
        SmallBranch nb;
        nb.values.assign(eff.begin(), eff.end());
        nb.child = merge2_walk(b.child, t2, op, sub, env);
        branches.push_back(std::move(nb));
      }
      NodePtr otherwise;
      if (t1->otherwise) {
        std::set<std::string> rest;
        for (const std::string& v : allowed) {
          if (!covered.count(v)) rest.insert(v);
        }
        if (!rest.empty()) {
          Context sub = ctx.restrict_small(t1->variable, rest, env);
          otherwise = merge2_walk(t1->otherwise, t2, op, sub, env);
        }
      }
      if (branches.empty() && otherwise) return otherwise;
      if (branches.size() == 1 && !otherwise &&
          branches.front().values.size() == allowed.size()) {
        return branches.front().child;
      }
      if (branches.empty() && !otherwise) return t1;
      return small_split(t1->variable, std::move(branches), std::move(otherwise));
    }
    case TreeNode::Kind::PredSplit: {
      if (std::optional<bool> d = ctx.decide(t1->atom)) {
        return merge2_walk(*d ? t1->yes : t1->no, t2, op, ctx, env);
      }
      std::string subject = atom_subject_variable(t1->atom);
      Context yes_ctx = ctx.with_literal(subject, Literal{t1->atom, true});
      Context no_ctx = ctx.with_literal(subject, Literal{t1->atom, false});
      if (yes_ctx.contradictory) return merge2_walk(t1->no, t2, op, no_ctx, env);
      if (no_ctx.contradictory) return merge2_walk(t1->yes, t2, op, yes_ctx, env);
      return pred_split(t1->atom, merge2_walk(t1->yes, t2, op, yes_ctx, env),
                        merge2_walk(t1->no, t2, op, no_ctx, env));
    }
  }
  throw std::logic_error("unreachable node kind");
}

}  // namespace

NodePtr merge2(const NodePtr& t1, const NodePtr& t2, MergeOp op,
               const EvalEnv& env) {
  if (!t1 || !t2) throw std::invalid_argument("merge2 of null tree");
  return merge2_walk(t1, t2, op, Context{}, env);
}

NodePtr merge(const std::vector<NodePtr>& trees, MergeOp op,
              const EvalEnv& env) {
  if (trees.empty()) throw std::invalid_argument("merge of empty tree list");
  NodePtr acc = trees.front();
  for (std::size_t i = 1; i < trees.size(); ++i) {
    acc = merge2(acc, trees[i], op, env);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Conditioning

namespace {

LabelPtr condition_label(const LabelPtr& label, const std::string& var,
                         const std::string& value, const EvalEnv& env) {
  switch (label->kind) {
    case LabelExpr::Kind::Const:
    case LabelExpr::Kind::PNew:
      return label;
    case LabelExpr::Kind::PrSing:
      if (label->term.is_variable && label->term.text == var) {
        return label_prsing(lit_term(value));
      }
      return label;
    case LabelExpr::Kind::TablePdf:
      if (label->variable == var) {
        const NameTable& t = env.table(label->table_id);
        std::optional<double> p = table_lookup(t, value);
        return label_const(p ? *p : t.pnew);
      }
      return label;
    case LabelExpr::Kind::Product:
    case LabelExpr::Kind::Sum: {
      std::vector<LabelPtr> parts;
      parts.reserve(label->parts.size());
      for (const LabelPtr& p : label->parts) {
        parts.push_back(condition_label(p, var, value, env));
      }
      return label->kind == LabelExpr::Kind::Product
                 ? label_product(std::move(parts))
                 : label_sum(std::move(parts));
    }
  }
  throw std::logic_error("unreachable label kind");
}

NodePtr condition_node(const NodePtr& node, const std::string& var,
                       const std::string& value, const EvalEnv& env) {
  switch (node->kind) {
    case TreeNode::Kind::Leaf:
      return leaf(condition_label(node->label, var, value, env));
    case TreeNode::Kind::SmallSplit: {
      if (node->variable == var) {
        for (const SmallBranch& b : node->branches) {
          if (std::find(b.values.begin(), b.values.end(), value) !=
              b.values.end()) {
            return condition_node(b.child, var, value, env);
          }
        }
        if (node->otherwise) {
          return condition_node(node->otherwise, var, value, env);
        }
        throw std::invalid_argument("conditioning value " + value +
                                    " matches no branch of " + var);
      }
      std::vector<SmallBranch> branches;
      branches.reserve(node->branches.size());
      for (const SmallBranch& b : node->branches) {
        branches.push_back({b.values, condition_node(b.child, var, value, env)});
      }
      NodePtr otherwise =
          node->otherwise ? condition_node(node->otherwise, var, value, env)
                          : nullptr;
      return small_split(node->variable, std::move(branches), std::move(otherwise));
    }
    case TreeNode::Kind::PredSplit: {
      Atom grounded = atom_mentions(node->atom, var)
                          ? ground(node->atom, var, value)
                          : node->atom;
      if (std::optional<bool> d = try_decide(grounded, *env.tables)) {
        return condition_node(*d ? node->yes : node->no, var, value, env);
      }
      return pred_split(grounded, condition_node(node->yes, var, value, env),
                        condition_node(node->no, var, value, env));
    }
  }
  throw std::logic_error("unreachable node kind");
}

}  // namespace

Factor condition(const Factor& f, const std::string& var,
                 const std::string& value, const EvalEnv& env) {
  if (!std::binary_search(f.scope.begin(), f.scope.end(), var)) {
    throw std::invalid_argument("conditioning on variable not in scope: " + var);
  }
  const VariableDecl& decl = env.variable(var);
  std::string v = decl.domain.is_large() ? normalize_name(value) : value;
  if (!decl.domain.contains(v)) {
    throw std::invalid_argument("value " + value + " outside domain of " + var);
  }
  std::vector<std::string> scope;
  for (const std::string& s : f.scope) {
    if (s != var) scope.push_back(s);
  }
  return Factor{std::move(scope), condition_node(f.root, var, v, env)};
}

Factor multiply(const std::vector<Factor>& factors, const EvalEnv& env) {
  if (factors.empty()) throw std::invalid_argument("multiply of empty factor list");
  std::vector<std::string> scope;
  std::vector<NodePtr> trees;
  trees.reserve(factors.size());
  for (const Factor& f : factors) {
    scope.insert(scope.end(), f.scope.begin(), f.scope.end());
    trees.push_back(f.root);
  }
  std::sort(scope.begin(), scope.end());
  scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
  NodePtr root = prune_node(merge(trees, MergeOp::Multiply, env), Context{}, env);
  return Factor{std::move(scope), std::move(root)};
}

// ---------------------------------------------------------------------------
// Pretty printing

std::string label_to_string(const LabelExpr& label) {
  switch (label.kind) {
    case LabelExpr::Kind::Const:
      return format_double(label.value);
    case LabelExpr::Kind::PrSing:
      return "prsing(" + (label.term.is_variable ? label.term.text
                                                 : "\"" + label.term.text + "\"") +
             ")";
    case LabelExpr::Kind::TablePdf:
      return "pdf(" + label.variable + ", " + label.table_id + ")";
    case LabelExpr::Kind::PNew:
      return "pnew(" + label.table_id + ")";
    case LabelExpr::Kind::Product:
    case LabelExpr::Kind::Sum: {
      std::string sep = label.kind == LabelExpr::Kind::Product ? " * " : " + ";
      std::string out;
      for (std::size_t i = 0; i < label.parts.size(); ++i) {
        if (i) out += sep;
        bool paren = label.parts[i]->kind == LabelExpr::Kind::Sum &&
                     label.kind == LabelExpr::Kind::Product;
        if (paren) out += "(";
        out += label_to_string(*label.parts[i]);
        if (paren) out += ")";
      }
      return out;
    }
  }
  throw std::logic_error("unreachable label kind");
}

std::string pretty_print_node(const NodePtr& node, int indent) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  std::ostringstream out;
  switch (node->kind) {
    case TreeNode::Kind::Leaf:
      out << pad << "leaf " << label_to_string(*node->label) << "\n";
      return out.str();
    case TreeNode::Kind::SmallSplit: {
      out << pad << "split " << node->variable << "\n";
      for (const SmallBranch& b : node->branches) {
        out << pad << "  [";
        for (std::size_t i = 0; i < b.values.size(); ++i) {
          if (i) out << ",";
          out << b.values[i];
        }
        out << "]\n" << pretty_print_node(b.child, indent + 2);
      }
      if (node->otherwise) {
        out << pad << "  [else]\n" << pretty_print_node(node->otherwise, indent + 2);
      }
      return out.str();
    }
    case TreeNode::Kind::PredSplit:
      out << pad << "pred " << atom_to_string(node->atom) << "\n";
      out << pad << "  yes:\n" << pretty_print_node(node->yes, indent + 2);
      out << pad << "  no:\n" << pretty_print_node(node->no, indent + 2);
      return out.str();
  }
  throw std::logic_error("unreachable node kind");
}

std::string pretty_print(const Factor& f) {
  std::ostringstream out;
  out << "factor(";
  for (std::size_t i = 0; i < f.scope.size(); ++i) {
    if (i) out << ", ";
    out << f.scope[i];
  }
  out << ")\n" << pretty_print_node(f.root, 1);
  return out.str();
}

}  // namespace ldve
