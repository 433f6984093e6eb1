#include <random>

#include "doctest.h"
#include "ldve/factor_tree.hpp"
#include "test_support.hpp"

using namespace ldve;
using namespace ldve::testing;

namespace {

// The three-case observed-name CPD over {EFx, Afname, Fname_x, Sex}, as a
// plain tree: no-error identity, single-edit spread, sex-specific table draw.
Factor observed_name_cpd(const TestEnv& te) {
  (void)te;
  NodePtr noerr = pred_split(equal_atom(var_term("Afname"), var_term("Fname_x")),
                             leaf(1.0), leaf(0.0));
  NodePtr sde =
      pred_split(single_edit_atom(var_term("Afname"), var_term("Fname_x")),
                 leaf(label_prsing(var_term("Fname_x"))), leaf(0.0));
  auto table_case = [&](const std::string& id) {
    return pred_split(in_table_atom(var_term("Fname_x"), id),
                      leaf(label_table_pdf("Fname_x", id)),
                      leaf(label_pnew(id)));
  };
  NodePtr ce = small_split(
      "Sex", {{{"male"}, table_case("male")}, {{"female"}, table_case("female")}});
  NodePtr root = small_split(
      "EFx", {{{"noerr"}, noerr}, {{"sde"}, sde}, {{"ce"}, ce}});
  return make_factor({"EFx", "Afname", "Fname_x", "Sex"}, root);
}

TestEnv linkage_env() {
  TestEnv te;
  te.add_small("EFx", {"noerr", "sde", "ce"});
  te.add_small("Sex", {"male", "female"});
  te.add_large("Afname");
  te.add_large("Fname_x");
  te.tables.emplace("male",
                    load_name_table("male", "DAVID 2363\nDAVIS 1500\nJOHN 86137\n",
                                    1e-4, 0.9));
  te.tables.emplace("female",
                    load_name_table("female", "MARY 60000\nLINDA 30000\n", 1e-4,
                                    0.9));
  return te;
}

}  // namespace

TEST_CASE("evaluating the three-case CPD reproduces the case table") {
  TestEnv te = linkage_env();
  EvalEnv env = te.env();
  Factor f = observed_name_cpd(te);
  validate_factor(f, env);

  Assignment a{{"EFx", "noerr"},
               {"Afname", "DAVID"},
               {"Fname_x", "DAVID"},
               {"Sex", "male"}};
  CHECK(evaluate(f, a, env) == 1.0);

  a["Afname"] = "JOHN";
  CHECK(evaluate(f, a, env) == 0.0);

  Assignment sde{{"EFx", "sde"},
                 {"Afname", "DAVO"},
                 {"Fname_x", "DAVE"},
                 {"Sex", "female"}};
  CHECK(evaluate(f, sde, env) == doctest::Approx(1.0 / 100).epsilon(1e-12));

  Assignment ce{{"EFx", "ce"},
                {"Afname", "JOHN"},
                {"Fname_x", "DAVID"},
                {"Sex", "male"}};
  CHECK(evaluate(f, ce, env) == doctest::Approx(0.02363).epsilon(1e-12));

  Assignment missing{{"EFx", "noerr"}};
  CHECK_THROWS_AS(evaluate(f, missing, env), std::invalid_argument);
}

TEST_CASE("evaluate errors on a value with no branch and no else") {
  TestEnv te;
  te.add_small("X", {"a", "b", "c"});
  EvalEnv env = te.env();
  Factor partial = make_factor(
      {"X"}, small_split("X", {{{"a"}, leaf(1.0)}, {{"b"}, leaf(2.0)}}));
  CHECK_THROWS_AS(evaluate(partial, {{"X", "c"}}, env), std::invalid_argument);

  Factor with_else = make_factor(
      {"X"}, small_split("X", {{{"a"}, leaf(1.0)}}, leaf(9.0)));
  CHECK(evaluate(with_else, {{"X", "c"}}, env) == 9.0);
}

TEST_CASE("prune removes descendant branches ancestors rule out") {
  TestEnv te;
  te.add_small("X", {"1", "2", "3"});
  EvalEnv env = te.env();
  // Outer split restricts X to {1,2}; the inner split's {3} branch is dead
  // and the inner node collapses away entirely.
  NodePtr inner = small_split(
      "X", {{{"1", "2"}, leaf(5.0)}, {{"3"}, leaf(7.0)}});
  NodePtr outer = small_split("X", {{{"1", "2"}, inner}, {{"3"}, leaf(1.0)}});
  Factor f = make_factor({"X"}, outer);
  Factor pruned = prune(f, Context{}, env);

  REQUIRE(pruned.root->kind == TreeNode::Kind::SmallSplit);
  REQUIRE(pruned.root->branches.size() == 2);
  CHECK(pruned.root->branches[0].child->kind == TreeNode::Kind::Leaf);

  CHECK(max_pointwise_gap(te, f, pruned, {"X"}, {}) == 0.0);
}

TEST_CASE("prune folds predicate splits the context decides") {
  TestEnv te;
  te.add_large("Y");
  EvalEnv env = te.env();
  Atom eq = equal_atom(var_term("Y"), lit_term("A"));
  Factor f = make_factor({"Y"}, pred_split(eq, leaf(1.0), leaf(2.0)));

  Context ctx;
  ctx = ctx.with_literal("Y", Literal{eq, false});
  Factor pruned = prune(f, ctx, env);
  REQUIRE(pruned.root->kind == TreeNode::Kind::Leaf);
  CHECK(pruned.root->label->value == 2.0);

  // Pointwise equal on every context-consistent value of a closed universe.
  std::vector<std::string> universe = universe_up_to(te.alphabet, 1);
  for (const std::string& v : universe) {
    if (v == "A") continue;  // excluded by the context
    Assignment a{{"Y", v}};
    CHECK(evaluate(f, a, env) == evaluate(pruned, a, env));
  }
}

TEST_CASE("prune under an empty context preserves semantics") {
  TestEnv te = linkage_env();
  EvalEnv env = te.env();
  Factor f = observed_name_cpd(te);
  Factor pruned = prune(f, Context{}, env);
  std::vector<std::string> universe{"DAVID", "DAVIS", "MARY", "XY"};
  CHECK(max_pointwise_gap(te, f, pruned, f.scope, universe) == 0.0);
}

TEST_CASE("merge2 with + makes all distinctions and adds leaves") {
  TestEnv te;
  te.add_small("X", {"x1", "x2"});
  te.add_small("Y", {"y1", "y2"});
  EvalEnv env = te.env();
  NodePtr t1 = small_split("X", {{{"x1"}, leaf(1.0)}, {{"x2"}, leaf(2.0)}});
  NodePtr t2 = small_split("Y", {{{"y1"}, leaf(3.0)}, {{"y2"}, leaf(4.0)}});
  NodePtr merged = merge2(t1, t2, MergeOp::Add, env);

  Factor mf = make_factor({"X", "Y"}, merged);
  EvalEnv e = te.env();
  CHECK(evaluate(mf, {{"X", "x1"}, {"Y", "y1"}}, e) == 4.0);
  CHECK(evaluate(mf, {{"X", "x1"}, {"Y", "y2"}}, e) == 5.0);
  CHECK(evaluate(mf, {{"X", "x2"}, {"Y", "y1"}}, e) == 5.0);
  CHECK(evaluate(mf, {{"X", "x2"}, {"Y", "y2"}}, e) == 6.0);
  // Structure: X on top, a Y split grafted under each branch.
  REQUIRE(merged->kind == TreeNode::Kind::SmallSplit);
  CHECK(merged->variable == "X");
  CHECK(merged->branches[0].child->variable == "Y");
}

TEST_CASE("multiplying by a constant-1 leaf is the identity") {
  TestEnv te = linkage_env();
  EvalEnv env = te.env();
  Factor f = observed_name_cpd(te);
  NodePtr merged = merge2(f.root, leaf(1.0), MergeOp::Multiply, env);
  Factor mf{f.scope, merged};
  std::vector<std::string> universe{"DAVID", "DAVIG", "MARY", "AB"};
  CHECK(max_pointwise_gap(te, f, mf, f.scope, universe) <= 1e-15);
}

TEST_CASE("a zero leaf short-circuits multiplication without grafting") {
  TestEnv te;
  te.add_small("X", {"x1", "x2"});
  te.add_small("Y", {"y1", "y2"});
  EvalEnv env = te.env();
  NodePtr t1 = small_split("X", {{{"x1"}, leaf(0.0)}, {{"x2"}, leaf(2.0)}});
  NodePtr t2 = small_split("Y", {{{"y1"}, leaf(3.0)}, {{"y2"}, leaf(4.0)}});
  NodePtr merged = merge2(t1, t2, MergeOp::Multiply, env);

  REQUIRE(merged->kind == TreeNode::Kind::SmallSplit);
  // The zero leaf stays a leaf; the other branch received the graft.
  REQUIRE(merged->branches[0].child->kind == TreeNode::Kind::Leaf);
  CHECK(label_is_zero(*merged->branches[0].child->label));
  CHECK(merged->branches[1].child->kind == TreeNode::Kind::SmallSplit);

  Factor mf = make_factor({"X", "Y"}, merged);
  CHECK(evaluate(mf, {{"X", "x1"}, {"Y", "y1"}}, env) == 0.0);
  CHECK(evaluate(mf, {{"X", "x2"}, {"Y", "y2"}}, env) == 8.0);
}

TEST_CASE("merge2 multiplies pointwise on random trees") {
  TestEnv te;
  te.alphabet = make_alphabet("AB");
  te.add_small("A", {"a1", "a2", "a3"});
  te.add_small("B", {"b1", "b2"});
  te.add_large("Y");
  te.tables.emplace(
      "t", make_table("t", {{"AB", 0.4}, {"BA", 0.3}},
                      0.3 / 28.0, Cardinality::of(28)));
  EvalEnv env = te.env();
  std::vector<std::string> universe = universe_up_to(te.alphabet, 3);

  std::mt19937_64 rng(5);
  auto rnd = [&](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  std::function<NodePtr(int)> random_tree = [&](int depth) -> NodePtr {
    if (depth == 0 || rng() % 3 == 0) {
      switch (rng() % 4) {
        case 0: return leaf(rnd(0.0, 2.0));
        case 1: return leaf(label_table_pdf("Y", "t"));
        case 2: return leaf(label_prsing(lit_term("AB")));
        default: return leaf(0.0);
      }
    }
    switch (rng() % 3) {
      case 0:
        return small_split("A", {{{"a1"}, random_tree(depth - 1)},
                                 {{"a2", "a3"}, random_tree(depth - 1)}});
      case 1:
        return small_split("B", {{{"b1"}, random_tree(depth - 1)},
                                 {{"b2"}, random_tree(depth - 1)}});
      default:
        return pred_split(
            equal_atom(var_term("Y"), lit_term(universe[rng() % universe.size()])),
            random_tree(depth - 1), random_tree(depth - 1));
    }
  };

  std::vector<std::string> scope{"A", "B", "Y"};
  for (int trial = 0; trial < 25; ++trial) {
    Factor f1 = make_factor(scope, random_tree(3));
    Factor f2 = make_factor(scope, random_tree(3));
    NodePtr merged = merge2(f1.root, f2.root, MergeOp::Multiply, env);
    Factor mf{scope, merged};
    double worst = 0.0;
    for_each_assignment(te, scope, universe, [&](const Assignment& a) {
      double expect = evaluate(f1, a, env) * evaluate(f2, a, env);
      worst = std::max(worst, std::abs(expect - evaluate(mf, a, env)));
    });
    CHECK(worst <= 1e-12);

    NodePtr added = merge2(f1.root, f2.root, MergeOp::Add, env);
    Factor af{scope, added};
    worst = 0.0;
    for_each_assignment(te, scope, universe, [&](const Assignment& a) {
      double expect = evaluate(f1, a, env) + evaluate(f2, a, env);
      worst = std::max(worst, std::abs(expect - evaluate(af, a, env)));
    });
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("merge folds left and any bracketing agrees pointwise") {
  TestEnv te;
  te.add_small("X", {"x1", "x2"});
  EvalEnv env = te.env();

  SUBCASE("singleton list returns the tree itself") {
    NodePtr t = leaf(3.0);
    CHECK(merge({t}, MergeOp::Add, env) == t);
  }
  SUBCASE("k constant leaves add to k*c") {
    std::vector<NodePtr> trees(5, leaf(0.25));
    NodePtr m = merge(trees, MergeOp::Add, env);
    REQUIRE(m->kind == TreeNode::Kind::Leaf);
    CHECK(m->label->value == doctest::Approx(1.25));
  }
  SUBCASE("bracketing does not change values") {
    NodePtr a = small_split("X", {{{"x1"}, leaf(1.0)}, {{"x2"}, leaf(2.0)}});
    NodePtr b = small_split("X", {{{"x1"}, leaf(3.0)}, {{"x2"}, leaf(5.0)}});
    NodePtr c = leaf(7.0);
    NodePtr left = merge({a, b, c}, MergeOp::Multiply, env);
    NodePtr right = merge2(a, merge2(b, c, MergeOp::Multiply, env),
                           MergeOp::Multiply, env);
    Factor lf = make_factor({"X"}, left), rf = make_factor({"X"}, right);
    CHECK(max_pointwise_gap(te, lf, rf, {"X"}, {}) <= 1e-12);
  }
  SUBCASE("empty list is an error") {
    CHECK_THROWS_AS(merge({}, MergeOp::Add, env), std::invalid_argument);
  }
}

TEST_CASE("conditioning the CPD on the observed name grounds its predicates") {
  TestEnv te = linkage_env();
  EvalEnv env = te.env();
  Factor f = observed_name_cpd(te);
  Factor g = condition(f, "Fname_x", "david", env);

  CHECK(g.scope == std::vector<std::string>{"Afname", "EFx", "Sex"});

  // noerr branch: equal(Afname, "DAVID"); sde branch: singlet(Afname, "DAVID").
  REQUIRE(g.root->kind == TreeNode::Kind::SmallSplit);
  const NodePtr& noerr = g.root->branches[0].child;
  REQUIRE(noerr->kind == TreeNode::Kind::PredSplit);
  CHECK(noerr->atom ==
        equal_atom(var_term("Afname"), lit_term("DAVID")));
  const NodePtr& sde = g.root->branches[1].child;
  REQUIRE(sde->kind == TreeNode::Kind::PredSplit);
  CHECK(sde->atom ==
        single_edit_atom(var_term("Afname"), lit_term("DAVID")));

  // ce branch: intable(david, male) folded to the 0.02363 entry and
  // intable(david, female) folded to that table's pnew.
  const NodePtr& ce = g.root->branches[2].child;
  REQUIRE(ce->kind == TreeNode::Kind::SmallSplit);
  const NodePtr& male = ce->branches[0].child;
  REQUIRE(male->kind == TreeNode::Kind::Leaf);
  CHECK(male->label->value == doctest::Approx(0.02363).epsilon(1e-12));
  const NodePtr& female = ce->branches[1].child;
  REQUIRE(female->kind == TreeNode::Kind::Leaf);
  CHECK(female->label->kind == LabelExpr::Kind::PNew);
  CHECK(female->label->table_id == "female");

  // Nothing in the result mentions the conditioned variable.
  std::vector<std::string> universe{"DAVID", "DAVIG", "MARY", "AB"};
  EvalEnv e = te.env();
  for_each_assignment(te, g.scope, universe, [&](const Assignment& a) {
    Assignment full = a;
    full["Fname_x"] = "DAVID";
    CHECK(evaluate(g, a, e) == evaluate(f, full, e));
  });
}

TEST_CASE("conditioning errors") {
  TestEnv te = linkage_env();
  EvalEnv env = te.env();
  Factor f = observed_name_cpd(te);
  CHECK_THROWS_AS(condition(f, "NotThere", "x", env), std::invalid_argument);
  CHECK_THROWS_AS(condition(f, "EFx", "bogus", env), std::invalid_argument);
  CHECK_THROWS_AS(condition(f, "Fname_x", "DAV1D", env), std::invalid_argument);
}

TEST_CASE("multiply unions scopes and matches per-factor products") {
  TestEnv te = linkage_env();
  EvalEnv env = te.env();
  Factor f1 = condition(observed_name_cpd(te), "Fname_x", "DAVID", env);

  auto prior_case = [&](const std::string& id) {
    return pred_split(in_table_atom(var_term("Afname"), id),
                      leaf(label_table_pdf("Afname", id)), leaf(label_pnew(id)));
  };
  Factor prior = make_factor(
      {"Afname", "Sex"},
      small_split("Sex", {{{"male"}, prior_case("male")},
                          {{"female"}, prior_case("female")}}));

  Factor product = multiply({prior, f1}, env);
  CHECK(product.scope == std::vector<std::string>{"Afname", "EFx", "Sex"});

  std::vector<std::string> universe{"DAVID", "DAVIS", "DAVIG", "MARY", "AB"};
  double worst = 0.0;
  for_each_assignment(te, product.scope, universe, [&](const Assignment& a) {
    double expect = evaluate(prior, a, env) * evaluate(f1, a, env);
    worst = std::max(worst, std::abs(expect - evaluate(product, a, env)));
  });
  CHECK(worst <= 1e-12);

  SUBCASE("multiplying a single factor is the identity") {
    Factor same = multiply({f1}, env);
    CHECK(max_pointwise_gap(te, f1, same, f1.scope, universe) == 0.0);
  }
}

TEST_CASE("pretty print is deterministic and readable") {
  TestEnv te = linkage_env();
  Factor f = observed_name_cpd(te);
  std::string a = pretty_print(f);
  std::string b = pretty_print(f);
  CHECK(a == b);
  CHECK(a.find("split EFx") != std::string::npos);
  CHECK(a.find("pred equal(Afname, Fname_x)") != std::string::npos);
  CHECK(a.find("prsing(Fname_x)") != std::string::npos);
}
