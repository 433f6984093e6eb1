#include "ldve/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace ldve {

const std::vector<std::string>& ClosedUniverse::of(const std::string& var) const {
  auto it = values.find(var);
  if (it == values.end()) {
    throw std::invalid_argument("no universe for variable " + var);
  }
  return it->second;
}

Network close_network_to_universe(Network net, const ClosedUniverse& universe) {
  if (universe.values.empty()) return net;
  // All large variables must share one universe; tables are then closed
  // against that common value set.
  const std::vector<std::string>* shared = nullptr;
  for (const auto& [var, values] : universe.values) {
    if (!shared) {
      shared = &values;
    } else if (*shared != values) {
      throw std::invalid_argument(
          "close_network_to_universe requires one shared universe");
    }
  }
  std::set<std::string> u(shared->begin(), shared->end());
  for (auto& [id, table] : net.tables) {
    std::uint64_t outside = 0;
    for (const auto& [name, p] : table.entries) {
      if (!u.count(name)) {
        throw std::invalid_argument("universe misses table entry " + name);
      }
    }
    outside = u.size() - table.entries.size();
    double entry_sum = table.entry_sum();
    if (outside == 0) {
      if (std::abs(entry_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("table " + id +
                                    " covers the whole universe but sums to " +
                                    std::to_string(entry_sum));
      }
      table.n_unseen = Cardinality::of(0);
    } else {
      table.n_unseen = Cardinality::of(outside);
      table.pnew = (1.0 - entry_sum) / static_cast<double>(outside);
    }
    validate_table(table);
  }
  return net;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double w) {
    double y = w - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

struct EnumerationAxes {
  std::vector<std::string> hidden;                 // enumeration order
  std::vector<const std::vector<std::string>*> domains;
  std::uint64_t joint_states = 1;
};

EnumerationAxes enumeration_axes(const Network& net,
                                 const ClosedUniverse& universe,
                                 const Assignment& evidence) {
  EnumerationAxes axes;
  for (const VariableDecl& v : net.variables) {
    if (evidence.count(v.name)) continue;
    axes.hidden.push_back(v.name);
    const std::vector<std::string>* domain =
        v.domain.is_small() ? &v.domain.values : &universe.of(v.name);
    axes.domains.push_back(domain);
    axes.joint_states *= domain->size();
    if (axes.joint_states > 10000000ULL) {
      throw std::invalid_argument("universe too large: more than 1e7 joint states");
    }
  }
  return axes;
}

// Walks every joint assignment consistent with the evidence, calling
// fn(assignment, weight) for the nonzero ones; returns the total weight.
template <typename Fn>
double enumerate_joint(const Network& net, const ClosedUniverse& universe,
                       const Assignment& evidence, Fn&& fn) {
  auto index = net.variable_index();
  EvalEnv env = net.env(index);
  EnumerationAxes axes = enumeration_axes(net, universe, evidence);

  Assignment a;
  for (const auto& [var, value] : evidence) {
    a[var] = net.variable(var).domain.is_large() ? normalize_name(value) : value;
  }
  std::vector<std::size_t> cursor(axes.hidden.size(), 0);
  for (std::size_t i = 0; i < axes.hidden.size(); ++i) {
    a[axes.hidden[i]] = (*axes.domains[i])[0];
  }
  KahanSum total;
  bool done = axes.joint_states == 0;
  while (!done) {
    double weight = 1.0;
    for (const auto& [child, cpd] : net.cpds) {
      weight *= evaluate(cpd, a, env);
      if (weight == 0.0) break;
    }
    if (weight != 0.0) {
      total.add(weight);
      fn(a, weight);
    }
    done = true;
    for (std::size_t i = 0; i < cursor.size(); ++i) {
      if (++cursor[i] < axes.domains[i]->size()) {
        a[axes.hidden[i]] = (*axes.domains[i])[cursor[i]];
        done = false;
        break;
      }
      cursor[i] = 0;
      a[axes.hidden[i]] = (*axes.domains[i])[0];
    }
  }
  return total.sum;
}

}  // namespace

std::map<std::string, Posterior> oracle_all_posteriors(
    const Network& net, const ClosedUniverse& universe,
    const Assignment& evidence) {
  EnumerationAxes axes = enumeration_axes(net, universe, evidence);
  std::map<std::string, std::map<std::string, KahanSum>> buckets;
  for (const std::string& h : axes.hidden) buckets[h];

  double normalizer = enumerate_joint(
      net, universe, evidence, [&](const Assignment& a, double weight) {
        for (const std::string& h : axes.hidden) {
          buckets[h][a.at(h)].add(weight);
        }
      });
  if (!(normalizer > 0.0)) {
    throw InferenceError("evidence has probability zero");
  }

  std::map<std::string, Posterior> out;
  for (std::size_t i = 0; i < axes.hidden.size(); ++i) {
    Posterior p;
    p.variable = axes.hidden[i];
    for (const std::string& value : *axes.domains[i]) {
      KahanSum& k = buckets[axes.hidden[i]][value];
      p.explicit_values[value] = k.sum / normalizer;
    }
    out.emplace(axes.hidden[i], std::move(p));
  }
  return out;
}

double oracle_evidence_likelihood(const Network& net,
                                  const ClosedUniverse& universe,
                                  const Assignment& evidence) {
  if (evidence.empty()) {
    throw std::invalid_argument("oracle likelihood needs nonempty evidence");
  }
  return enumerate_joint(net, universe, evidence,
                         [](const Assignment&, double) {});
}

Posterior oracle_posterior(const Network& net, const ClosedUniverse& universe,
                           const Assignment& evidence,
                           const std::string& query) {
  if (evidence.count(query)) {
    throw std::invalid_argument("query variable " + query + " is observed");
  }
  std::map<std::string, Posterior> all =
      oracle_all_posteriors(net, universe, evidence);
  auto it = all.find(query);
  if (it == all.end()) throw std::invalid_argument("unknown query " + query);
  return std::move(it->second);
}

// ---------------------------------------------------------------------------
// Random networks

namespace {

// Deterministic helpers over mt19937_64; standard distributions are not
// pinned down by the standard, these are.
struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}

  std::uint64_t raw() { return gen(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(raw() % n); }
  double unit() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }
  bool chance(double p) { return unit() < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[index(v.size())];
  }
};

std::vector<std::string> strings_up_to(const Alphabet& alphabet, int max_len) {
  std::vector<std::string> out;
  std::vector<std::string> frontier{""};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const std::string& prefix : frontier) {
      for (char c : alphabet.letters) {
        next.push_back(prefix + c);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

NameTable random_closed_table(Rng& rng, const std::string& id,
                              const std::vector<std::string>& universe) {
  std::size_t max_entries = std::max<std::size_t>(2, universe.size() / 2);
  std::size_t n_entries = 2 + rng.index(max_entries - 1);
  std::set<std::string> chosen;
  while (chosen.size() < n_entries) {
    chosen.insert(rng.pick(universe));
  }
  double coverage = rng.range(0.5, 0.9);
  std::map<std::string, double> weights;
  double weight_sum = 0.0;
  for (const std::string& name : chosen) {
    double w = rng.range(0.2, 1.0);
    weights[name] = w;
    weight_sum += w;
  }
  std::map<std::string, double> entries;
  for (const auto& [name, w] : weights) {
    entries[name] = w / weight_sum * coverage;
  }
  std::uint64_t n_unseen = universe.size() - chosen.size();
  double pnew = (1.0 - coverage) / static_cast<double>(n_unseen);
  return make_table(id, std::move(entries), pnew, Cardinality::of(n_unseen));
}

double pdf_value(const NameTable& t, const std::string& v) {
  std::optional<double> p = table_lookup(t, v);
  return p ? *p : t.pnew;
}

// One of the predicate atoms over a large variable, with arguments drawn
// from the universe.
Atom random_atom(Rng& rng, const std::string& var,
                 const std::vector<std::string>& universe,
                 const std::vector<std::string>& table_ids) {
  switch (rng.index(table_ids.empty() ? 3 : 4)) {
    case 0:
      return equal_atom(var_term(var), lit_term(rng.pick(universe)));
    case 1:
      return single_edit_atom(var_term(var), lit_term(rng.pick(universe)));
    case 2: {
      std::set<std::string> s;
      std::size_t n = 2 + rng.index(3);
      while (s.size() < n) s.insert(rng.pick(universe));
      return in_set_atom(var_term(var),
                         std::vector<std::string>(s.begin(), s.end()));
    }
    default:
      return in_table_atom(var_term(var), table_ids[rng.index(table_ids.size())]);
  }
}

// Distribution leaf for a small child: a split on the child with one strictly
// positive constant per value.
NodePtr random_distribution_split(Rng& rng, const VariableDecl& child) {
  std::vector<double> weights;
  double sum = 0.0;
  for (std::size_t i = 0; i < child.domain.values.size(); ++i) {
    weights.push_back(rng.range(0.2, 1.0));
    sum += weights.back();
  }
  std::vector<SmallBranch> branches;
  for (std::size_t i = 0; i < child.domain.values.size(); ++i) {
    branches.push_back({{child.domain.values[i]}, leaf(weights[i] / sum)});
  }
  return small_split(child.name, std::move(branches));
}

// Normalized tree over a large child: either its table pdf outright, or a
// predicate split with the table pdf rescaled on the negative side.
NodePtr random_large_prior(Rng& rng, const std::string& child,
                           const NameTable& table,
                           const std::vector<std::string>& universe,
                           const Alphabet& alphabet, bool force_predicate) {
  int shape = force_predicate ? 1 + static_cast<int>(rng.index(3))
                              : static_cast<int>(rng.index(4));
  if (shape == 0) return leaf(label_table_pdf(child, table.id));

  double alpha = rng.range(0.1, 0.9);
  Atom atom;
  LabelPtr yes_label;
  double generator_mass = 0.0;
  switch (shape) {
    case 1: {
      std::string w = rng.pick(universe);
      atom = equal_atom(var_term(child), lit_term(w));
      yes_label = label_const(alpha);
      generator_mass = pdf_value(table, w);
      break;
    }
    case 2: {
      std::set<std::string> s;
      std::size_t n = 2 + rng.index(3);
      while (s.size() < n) s.insert(rng.pick(universe));
      atom = in_set_atom(var_term(child),
                         std::vector<std::string>(s.begin(), s.end()));
      yes_label = label_const(alpha / static_cast<double>(s.size()));
      for (const std::string& v : s) generator_mass += pdf_value(table, v);
      break;
    }
    default: {
      std::string w = rng.pick(universe);
      atom = single_edit_atom(var_term(child), lit_term(w));
      yes_label = label_product({label_const(alpha), label_prsing(lit_term(w))});
      for (const std::string& v : single_edit_neighbors(w, alphabet)) {
        generator_mass += pdf_value(table, v);
      }
      break;
    }
  }
  double rescale = (1.0 - alpha) / (1.0 - generator_mass);
  NodePtr no_branch = leaf(
      label_product({label_const(rescale), label_table_pdf(child, table.id)}));
  return pred_split(std::move(atom), leaf(yes_label), std::move(no_branch));
}

}  // namespace

GeneratedNetwork random_network(std::uint64_t seed, const NetworkShape& shape) {
  Rng rng(seed);
  GeneratedNetwork gen;
  Network& net = gen.net;

  bool two_letter = rng.chance(0.5);
  net.alphabet = make_alphabet(two_letter ? "AB" : "ABC");
  std::vector<std::string> universe =
      strings_up_to(net.alphabet, two_letter ? 4 : 3);

  int n_vars = 2 + static_cast<int>(rng.index(
                       static_cast<std::size_t>(shape.max_variables - 1)));
  int n_large = 1 + (n_vars >= 4 && rng.chance(0.35) ? 1 : 0);

  // Kind per position; large positions spread randomly.
  std::vector<bool> is_large(n_vars, false);
  int placed = 0;
  while (placed < n_large) {
    std::size_t pos = rng.index(n_vars);
    if (!is_large[pos]) {
      is_large[pos] = true;
      ++placed;
    }
  }

  std::uint64_t joint = 1;
  for (int i = 0; i < n_vars; ++i) {
    std::string name = "V" + std::to_string(i);
    if (is_large[i] && joint * universe.size() <= shape.max_joint_states) {
      net.variables.push_back({name, large_domain(net.alphabet)});
      joint *= universe.size();
      gen.universe.values[name] = universe;
    } else {
      is_large[i] = false;
      int n_values =
          2 + static_cast<int>(rng.index(
                  static_cast<std::size_t>(shape.max_small_values - 1)));
      while (joint * n_values > shape.max_joint_states && n_values > 2) {
        --n_values;
      }
      std::vector<std::string> values;
      for (int k = 0; k < n_values; ++k) {
        values.push_back("v" + std::to_string(k));
      }
      net.variables.push_back({name, small_domain(values)});
      joint *= n_values;
    }
  }
  // Demotion above may have removed every large variable; force one back in
  // by replacing the last variable.
  if (std::none_of(is_large.begin(), is_large.end(), [](bool b) { return b; })) {
    VariableDecl& last = net.variables.back();
    last.domain = large_domain(net.alphabet);
    is_large[n_vars - 1] = true;
    gen.universe.values[last.name] = universe;
  }

  // Tables per large variable.
  std::map<std::string, std::vector<std::string>> tables_of;
  for (int i = 0; i < n_vars; ++i) {
    if (!is_large[i]) continue;
    int n_tables = 1 + (rng.chance(0.3) ? 1 : 0);
    for (int k = 0; k < n_tables; ++k) {
      std::string id = "t" + std::to_string(i) + "_" + std::to_string(k);
      net.tables.emplace(id, random_closed_table(rng, id, universe));
      tables_of[net.variables[i].name].push_back(id);
    }
  }

  auto index = net.variable_index();
  EvalEnv env = net.env(index);
  bool have_predicate = false;

  for (int i = 0; i < n_vars; ++i) {
    const VariableDecl& child = net.variables[i];
    // Parent candidates come from earlier variables. Large children take
    // only small parents; predicates never couple two large variables.
    std::vector<int> small_prev, large_prev;
    for (int j = 0; j < i; ++j) {
      (is_large[j] ? large_prev : small_prev).push_back(j);
    }

    std::vector<std::string> scope{child.name};
    std::vector<int> small_parents;
    std::optional<int> large_parent;
    if (!small_prev.empty() && rng.chance(0.75)) {
      small_parents.push_back(small_prev[rng.index(small_prev.size())]);
      if (small_prev.size() > 1 && !is_large[i] && rng.chance(0.3)) {
        int extra = small_prev[rng.index(small_prev.size())];
        if (extra != small_parents[0]) small_parents.push_back(extra);
      }
    }
    if (!is_large[i] && !large_prev.empty() && rng.chance(0.6)) {
      large_parent = large_prev[rng.index(large_prev.size())];
    }
    for (int p : small_parents) scope.push_back(net.variables[p].name);
    if (large_parent) scope.push_back(net.variables[*large_parent].name);

    // Leaf builder for one fully chosen parent context.
    auto make_leaf_tree = [&](auto&& self, std::size_t parent_pos) -> NodePtr {
      if (parent_pos < small_parents.size()) {
        const VariableDecl& parent = net.variables[small_parents[parent_pos]];
        const std::vector<std::string>& values = parent.domain.values;
        // Either one branch per value or a grouped prefix with an else.
        if (values.size() >= 3 && rng.chance(0.4)) {
          std::size_t cut = 1 + rng.index(values.size() - 1);
          std::vector<std::string> grouped(values.begin(),
                                           values.begin() + cut);
          std::vector<SmallBranch> branches;
          branches.push_back({grouped, self(self, parent_pos + 1)});
          return small_split(parent.name, std::move(branches),
                             self(self, parent_pos + 1));
        }
        std::vector<SmallBranch> branches;
        for (const std::string& v : values) {
          branches.push_back({{v}, self(self, parent_pos + 1)});
        }
        return small_split(parent.name, std::move(branches));
      }
      if (is_large[i]) {
        const std::vector<std::string>& ids = tables_of[child.name];
        const NameTable& table = net.tables.at(ids[rng.index(ids.size())]);
        bool force = !have_predicate;
        NodePtr prior = random_large_prior(rng, child.name, table, universe,
                                           net.alphabet, force);
        if (prior->kind == TreeNode::Kind::PredSplit) have_predicate = true;
        return prior;
      }
      if (large_parent) {
        const std::string& parent = net.variables[*large_parent].name;
        Atom atom = random_atom(rng, parent, universe, tables_of[parent]);
        have_predicate = true;
        return pred_split(std::move(atom), random_distribution_split(rng, child),
                          random_distribution_split(rng, child));
      }
      return random_distribution_split(rng, child);
    };

    Factor cpd = make_factor(scope, make_leaf_tree(make_leaf_tree, 0));
    validate_factor(cpd, env);
    net.cpds.emplace(child.name, std::move(cpd));
  }

  validate_network(net);
  return gen;
}

Assignment random_evidence(std::uint64_t seed, const GeneratedNetwork& gen) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Assignment evidence;
  const std::vector<VariableDecl>& vars = gen.net.variables;
  for (const VariableDecl& v : vars) {
    if (evidence.size() + 1 >= vars.size()) break;  // keep one hidden
    if (!rng.chance(0.35)) continue;
    if (v.domain.is_small()) {
      evidence[v.name] = rng.pick(v.domain.values);
    } else {
      evidence[v.name] = rng.pick(gen.universe.of(v.name));
    }
  }
  return evidence;
}

std::string serialize_for_hash(const Network& net) {
  std::ostringstream out;
  out << "alphabet " << net.alphabet.letters << "\n";
  for (const VariableDecl& v : net.variables) {
    out << "var " << v.name;
    if (v.domain.is_small()) {
      for (const std::string& value : v.domain.values) out << " " << value;
    } else {
      out << " <large>";
    }
    out << "\n";
  }
  for (const auto& [id, t] : net.tables) {
    out << "table " << id << " pnew=" << format_double(t.pnew) << " unseen=";
    if (t.n_unseen.unbounded) {
      out << "unbounded";
    } else {
      out << t.n_unseen.count;
    }
    for (const auto& [name, p] : t.entries) {
      out << " " << name << ":" << format_double(p);
    }
    out << "\n";
  }
  for (const auto& [child, cpd] : net.cpds) {
    out << "cpd " << child << "\n" << pretty_print(cpd);
  }
  return out.str();
}

}  // namespace ldve
