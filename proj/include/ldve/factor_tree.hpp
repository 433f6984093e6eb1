#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ldve/domain.hpp"
#include "ldve/predicates.hpp"

namespace ldve {

// Everything tree operations need besides the trees themselves: variable
// declarations (domains), name tables, and the string alphabet.
struct EvalEnv {
  const std::map<std::string, VariableDecl>* variables = nullptr;
  const TableRegistry* tables = nullptr;
  const Alphabet* alphabet = nullptr;

  const VariableDecl& variable(const std::string& name) const;
  const NameTable& table(const std::string& id) const;
};

// Leaf label of a factor tree. Symbolic labels are evaluated lazily: PrSing
// is the single-edit error probability 1/((|alphabet|-1)*|w|), TablePdf is
// the per-value probability of a name table (entry value, or pnew when the
// value is unseen), PNew is a table's pnew constant.
struct LabelExpr;
using LabelPtr = std::shared_ptr<const LabelExpr>;

struct LabelExpr {
  enum class Kind { Const, PrSing, TablePdf, PNew, Product, Sum };
  Kind kind = Kind::Const;
  double value = 0.0;              // Const
  Term term;                       // PrSing
  std::string variable;            // TablePdf
  std::string table_id;            // TablePdf, PNew
  std::vector<LabelPtr> parts;     // Product, Sum
};

LabelPtr label_const(double value);
LabelPtr label_prsing(Term term);
LabelPtr label_table_pdf(std::string variable, std::string table_id);
LabelPtr label_pnew(std::string table_id);
// Flattens nested products, folds constant factors together, short-circuits
// zero, and drops the multiplicative identity.
LabelPtr label_product(std::vector<LabelPtr> parts);
// Flattens nested sums and folds constant addends together.
LabelPtr label_sum(std::vector<LabelPtr> parts);

bool label_is_zero(const LabelExpr& label);
bool label_mentions(const LabelExpr& label, const std::string& var);
std::vector<std::string> label_variables(const LabelExpr& label);
double eval_label(const LabelExpr& label, const Assignment& assignment,
                  const EvalEnv& env);

// Decision-tree node: splits on a small variable's values (with an optional
// else branch covering the rest of the domain), splits on a predicate
// outcome, or holds a leaf label.
struct TreeNode;
using NodePtr = std::shared_ptr<const TreeNode>;

struct SmallBranch {
  std::vector<std::string> values;  // nonempty, disjoint across branches
  NodePtr child;
};

struct TreeNode {
  enum class Kind { SmallSplit, PredSplit, Leaf };
  Kind kind = Kind::Leaf;
  // SmallSplit
  std::string variable;
  std::vector<SmallBranch> branches;
  NodePtr otherwise;  // may be null
  // PredSplit
  Atom atom;
  NodePtr yes;
  NodePtr no;
  // Leaf
  LabelPtr label;
};

NodePtr leaf(LabelPtr label);
NodePtr leaf(double value);
NodePtr small_split(std::string variable, std::vector<SmallBranch> branches,
                    NodePtr otherwise = nullptr);
NodePtr pred_split(Atom atom, NodePtr yes, NodePtr no);

// A nonnegative function over `scope`, represented as a decision tree.
struct Factor {
  std::vector<std::string> scope;  // sorted, distinct
  NodePtr root;
};

Factor make_factor(std::vector<std::string> scope, NodePtr root);
// Checks structural invariants against declared domains: branch sets
// nonempty, disjoint, within the variable's domain; every variable tested or
// mentioned is in scope. Throws std::invalid_argument.
void validate_factor(const Factor& f, const EvalEnv& env);

// Path constraints accumulated while walking trees: per small variable the
// set of still-allowed values, per large variable the literals that hold.
struct Context {
  std::map<std::string, std::set<std::string>> small_allowed;
  std::map<std::string, ConstraintSet> large_literals;
  bool contradictory = false;

  std::set<std::string> allowed(const std::string& var,
                                const EvalEnv& env) const;
  // Returns a copy restricted to subset (for `var` small). Marks the result
  // contradictory when the restriction is empty.
  Context restrict_small(const std::string& var,
                         const std::set<std::string>& subset,
                         const EvalEnv& env) const;
  // Returns a copy with the literal added; contradictory if it clashes.
  Context with_literal(const std::string& var, const Literal& lit) const;
  // What the context already implies about this atom, if anything.
  std::optional<bool> decide(const Atom& atom) const;
};

// Walks the tree under a total assignment of the factor's scope and
// evaluates the reached leaf. A value matched by no branch and no else is an
// error, as is an incomplete assignment.
double evaluate(const Factor& f, const Assignment& assignment,
                const EvalEnv& env);
double evaluate_node(const NodePtr& node, const Assignment& assignment,
                     const EvalEnv& env);

// Removes branches incompatible with the context, folds predicate splits the
// context decides, and collapses splits left with a single branch. The
// result is pointwise-equal on every context-consistent assignment.
Factor prune(const Factor& f, const Context& ctx, const EvalEnv& env);
NodePtr prune_node(const NodePtr& node, const Context& ctx, const EvalEnv& env);

enum class MergeOp { Add, Multiply };

// Grafts t2 onto every leaf of t1 and combines leaf labels with op,
// pruning the grafted copy against the path context. Multiplying keeps
// Const(0) leaves of t1 as-is without grafting.
NodePtr merge2(const NodePtr& t1, const NodePtr& t2, MergeOp op,
               const EvalEnv& env);
// Left fold of merge2 over the list, in list order.
NodePtr merge(const std::vector<NodePtr>& trees, MergeOp op, const EvalEnv& env);

// Incorporates an observation: split nodes on `var` are replaced by the
// matching branch, atoms mentioning it are grounded (and folded when that
// decides them), labels are specialized, and `var` leaves the scope.
Factor condition(const Factor& f, const std::string& var,
                 const std::string& value, const EvalEnv& env);

// merge(trees, *) over the factors' trees, pruned; scope is the union.
Factor multiply(const std::vector<Factor>& factors, const EvalEnv& env);

// Indented deterministic rendering used by golden tests and --verbose.
std::string pretty_print(const Factor& f);
std::string pretty_print_node(const NodePtr& node, int indent = 0);
std::string label_to_string(const LabelExpr& label);

// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

}  // namespace ldve
