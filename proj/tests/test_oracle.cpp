#include <cmath>

#include "doctest.h"
#include "ldve/oracle.hpp"
#include "test_support.hpp"

using namespace ldve;
using namespace ldve::testing;

TEST_CASE("generation is deterministic per seed") {
  GeneratedNetwork a = random_network(42);
  GeneratedNetwork b = random_network(42);
  CHECK(serialize_for_hash(a.net) == serialize_for_hash(b.net));
  GeneratedNetwork c = random_network(43);
  CHECK(serialize_for_hash(a.net) != serialize_for_hash(c.net));
}

TEST_CASE("generated networks keep the declared shape and normalize") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    GeneratedNetwork gen = random_network(seed);
    CHECK(gen.net.variables.size() <= 6);
    CHECK_NOTHROW(validate_network(gen.net));

    bool has_predicate = false;
    for (const auto& [child, cpd] : gen.net.cpds) {
      std::function<void(const NodePtr&)> walk = [&](const NodePtr& n) {
        if (n->kind == TreeNode::Kind::PredSplit) has_predicate = true;
        if (n->kind == TreeNode::Kind::SmallSplit) {
          for (const SmallBranch& b : n->branches) walk(b.child);
          if (n->otherwise) walk(n->otherwise);
        } else if (n->kind == TreeNode::Kind::PredSplit) {
          walk(n->yes);
          walk(n->no);
        }
      };
      walk(cpd.root);
    }
    CHECK(has_predicate);

    // Every CPD sums to one over each closed parent assignment.
    auto index = gen.net.variable_index();
    EvalEnv env = gen.net.env(index);
    for (const auto& [child, cpd] : gen.net.cpds) {
      std::vector<std::string> parents;
      for (const std::string& v : cpd.scope) {
        if (v != child) parents.push_back(v);
      }
      TestEnv te;
      te.variables = index;
      te.alphabet = gen.net.alphabet;
      const std::vector<std::string>& u =
          gen.universe.values.empty()
              ? std::vector<std::string>{}
              : gen.universe.values.begin()->second;
      double worst = 0.0;
      for_each_assignment(te, parents, u, [&](const Assignment& a) {
        double sum = 0.0;
        const VariableDecl& decl = gen.net.variable(child);
        const std::vector<std::string>& child_values =
            decl.domain.is_small() ? decl.domain.values
                                   : gen.universe.of(child);
        for (const std::string& v : child_values) {
          Assignment full = a;
          full[child] = v;
          sum += evaluate(cpd, full, env);
        }
        worst = std::max(worst, std::abs(sum - 1.0));
      });
      CHECK(worst <= 1e-9);
    }
  }
}

TEST_CASE("oracle returns exact point masses on deterministic chains") {
  TestEnv te;
  te.add_small("A", {"a1", "a2"});
  te.add_small("B", {"b1", "b2"});
  Network net;
  net.alphabet = te.alphabet;
  net.variables = {te.variables.at("A"), te.variables.at("B")};
  net.cpds.emplace("A", make_factor({"A"}, small_split("A", {{{"a1"}, leaf(1.0)},
                                                             {{"a2"}, leaf(0.0)}})));
  // B copies A.
  net.cpds.emplace(
      "B",
      make_factor(
          {"A", "B"},
          small_split("A",
                      {{{"a1"}, small_split("B", {{{"b1"}, leaf(1.0)},
                                                  {{"b2"}, leaf(0.0)}})},
                       {{"a2"}, small_split("B", {{{"b1"}, leaf(0.0)},
                                                  {{"b2"}, leaf(1.0)}})}})));
  ClosedUniverse empty;
  Posterior p = oracle_posterior(net, empty, {}, "B");
  CHECK(p.explicit_values.at("b1") == doctest::Approx(1.0));
  CHECK(p.explicit_values.at("b2") == doctest::Approx(0.0));
}

TEST_CASE("oracle returns uniform posteriors for uniform priors") {
  TestEnv te;
  te.add_small("A", {"a1", "a2", "a3", "a4"});
  Network net;
  net.alphabet = te.alphabet;
  net.variables = {te.variables.at("A")};
  net.cpds.emplace(
      "A", make_factor({"A"}, small_split("A", {{{"a1", "a2", "a3", "a4"},
                                                 leaf(0.25)}})));
  Posterior p = oracle_posterior(net, {}, {}, "A");
  for (const auto& [value, prob] : p.explicit_values) {
    CHECK(prob == doctest::Approx(0.25));
  }
}

TEST_CASE("oracle refuses oversized universes") {
  TestEnv te;
  Network net;
  net.alphabet = make_alphabet("AB");
  ClosedUniverse closed;
  std::vector<std::string> big;
  for (int i = 0; i < 4000; ++i) big.push_back("N" + std::to_string(i));
  for (const std::string& name : {"X", "Y", "Z"}) {
    net.variables.push_back({name, large_domain(net.alphabet)});
    net.cpds.emplace(name, make_factor({name}, leaf(1.0)));
    closed.values[name] = big;
  }
  CHECK_THROWS_WITH_AS(oracle_all_posteriors(net, closed, {}),
                       doctest::Contains("universe too large"),
                       std::invalid_argument);
}

TEST_CASE("random evidence never observes everything") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    GeneratedNetwork gen = random_network(seed);
    Assignment evidence = random_evidence(seed, gen);
    CHECK(evidence.size() < gen.net.variables.size());
    for (const auto& [var, value] : evidence) {
      const VariableDecl& decl = gen.net.variable(var);
      if (decl.domain.is_small()) {
        CHECK(decl.domain.contains(value));
      } else {
        const std::vector<std::string>& u = gen.universe.of(var);
        CHECK(std::find(u.begin(), u.end(), value) != u.end());
      }
    }
  }
}

TEST_CASE("close_network_to_universe rebuilds the unseen model") {
  TestEnv te;
  te.alphabet = make_alphabet("AB");
  Network net;
  net.alphabet = te.alphabet;
  net.variables.push_back({"Y", large_domain(net.alphabet)});
  net.tables.emplace("t", make_table("t", {{"AB", 0.5}, {"BA", 0.25}}, 1e-3,
                                     Cardinality::of(250)));
  net.cpds.emplace("Y", make_factor({"Y"}, leaf(label_table_pdf("Y", "t"))));

  ClosedUniverse closed;
  closed.values["Y"] = universe_up_to(net.alphabet, 3);  // 14 strings
  Network adjusted = close_network_to_universe(net, closed);
  const NameTable& t = adjusted.tables.at("t");
  CHECK(t.n_unseen.count == 12);
  CHECK(t.entry_sum() + table_residual_mass(t, 0).value ==
        doctest::Approx(1.0).epsilon(1e-12));

  // A universe that misses a table entry is rejected.
  ClosedUniverse bad;
  bad.values["Y"] = {"AB"};
  CHECK_THROWS_AS(close_network_to_universe(net, bad), std::invalid_argument);
}
