#pragma once

// Shared fixtures for the unit suites: a self-owning evaluation environment,
// closed-universe enumeration, and pointwise factor comparison.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ldve/factor_tree.hpp"

namespace ldve::testing {

struct TestEnv {
  std::map<std::string, VariableDecl> variables;
  TableRegistry tables;
  Alphabet alphabet = latin_alphabet();

  EvalEnv env() const { return EvalEnv{&variables, &tables, &alphabet}; }

  void add_small(const std::string& name, std::vector<std::string> values) {
    variables.emplace(name, VariableDecl{name, small_domain(std::move(values))});
  }
  void add_large(const std::string& name) {
    variables.emplace(name, VariableDecl{name, large_domain(alphabet)});
  }
};

// All strings over the alphabet with lengths 1..max_len. Closed under
// single-character substitution, so neighbor sets never leave it.
inline std::vector<std::string> universe_up_to(const Alphabet& alphabet,
                                               int max_len) {
  std::vector<std::string> out, frontier{""};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const std::string& p : frontier) {
      for (char c : alphabet.letters) next.push_back(p + c);
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

// Calls fn with every assignment of the listed variables, small variables
// ranging over their domains and large ones over `universe`.
inline void for_each_assignment(
    const TestEnv& te, const std::vector<std::string>& vars,
    const std::vector<std::string>& universe,
    const std::function<void(const Assignment&)>& fn) {
  Assignment a;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == vars.size()) {
      fn(a);
      return;
    }
    const VariableDecl& decl = te.variables.at(vars[i]);
    const std::vector<std::string>& values =
        decl.domain.is_small() ? decl.domain.values : universe;
    for (const std::string& v : values) {
      a[vars[i]] = v;
      rec(i + 1);
    }
    a.erase(vars[i]);
  };
  rec(0);
}

// Max |f - g| over every assignment of `vars`.
inline double max_pointwise_gap(const TestEnv& te, const Factor& f,
                                const Factor& g,
                                const std::vector<std::string>& vars,
                                const std::vector<std::string>& universe) {
  double worst = 0.0;
  EvalEnv env = te.env();
  for_each_assignment(te, vars, universe, [&](const Assignment& a) {
    double gap = std::abs(evaluate(f, a, env) - evaluate(g, a, env));
    if (gap > worst) worst = gap;
  });
  return worst;
}

}  // namespace ldve::testing
