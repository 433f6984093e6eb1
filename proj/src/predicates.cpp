#include "ldve/predicates.hpp"

#include <algorithm>
#include <sstream>

namespace ldve {

namespace {

// Equal length and exactly one differing position.
bool one_substitution_apart(const std::string& a, const std::string& b) {
  if (a.size() != b.size() || a.empty()) return false;
  int diffs = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i] && ++diffs > 1) return false;
  }
  return diffs == 1;
}

std::string resolve(const Term& term, const Assignment& assignment) {
  if (!term.is_variable) return term.text;
  auto it = assignment.find(term.text);
  if (it == assignment.end()) {
    throw std::invalid_argument("unassigned variable in atom: " + term.text);
  }
  return normalize_name(it->second);
}

const NameTable& table_or_throw(const TableRegistry& tables,
                                const std::string& id) {
  auto it = tables.find(id);
  if (it == tables.end()) {
    throw std::invalid_argument("unknown table: " + id);
  }
  return it->second;
}

}  // namespace

Term var_term(std::string name) { return Term{true, std::move(name)}; }

Term lit_term(std::string value) {
  return Term{false, normalize_name(value)};
}

bool Atom::operator<(const Atom& o) const {
  return std::tie(kind, subject, argument, table_id, values) <
         std::tie(o.kind, o.subject, o.argument, o.table_id, o.values);
}

Atom equal_atom(Term subject, Term argument) {
  Atom a;
  a.kind = AtomKind::Equal;
  a.subject = std::move(subject);
  a.argument = std::move(argument);
  return a;
}

Atom single_edit_atom(Term subject, Term argument) {
  Atom a;
  a.kind = AtomKind::SingleEdit;
  a.subject = std::move(subject);
  a.argument = std::move(argument);
  return a;
}

Atom in_table_atom(Term subject, std::string table_id) {
  Atom a;
  a.kind = AtomKind::InTable;
  a.subject = std::move(subject);
  a.table_id = std::move(table_id);
  return a;
}

Atom in_set_atom(Term subject, std::vector<std::string> values) {
  if (values.empty()) throw std::invalid_argument("InSet atom with empty set");
  for (std::string& v : values) v = normalize_name(v);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  Atom a;
  a.kind = AtomKind::InSet;
  a.subject = std::move(subject);
  a.values = std::move(values);
  return a;
}

std::vector<std::string> atom_variables(const Atom& atom) {
  std::vector<std::string> vars;
  if (atom.subject.is_variable) vars.push_back(atom.subject.text);
  if ((atom.kind == AtomKind::Equal || atom.kind == AtomKind::SingleEdit) &&
      atom.argument.is_variable && atom.argument.text != atom.subject.text) {
    vars.push_back(atom.argument.text);
  }
  return vars;
}

bool atom_mentions(const Atom& atom, const std::string& var) {
  for (const std::string& v : atom_variables(atom)) {
    if (v == var) return true;
  }
  return false;
}

bool add_literal(ConstraintSet& cs, const Literal& lit) {
  for (const Literal& existing : cs.literals) {
    if (existing.atom == lit.atom) {
      if (existing.positive != lit.positive) return false;
      return true;  // duplicate
    }
  }
  cs.literals.push_back(lit);
  std::sort(cs.literals.begin(), cs.literals.end());
  return true;
}

SolutionSet SolutionSet::explicit_set(std::vector<std::string> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  SolutionSet s;
  s.kind = Kind::Explicit;
  s.values = std::move(values);
  return s;
}

bool eval_atom(const Atom& atom, const Assignment& assignment,
               const TableRegistry& tables) {
  std::string subject = resolve(atom.subject, assignment);
  switch (atom.kind) {
    case AtomKind::Equal:
      return subject == resolve(atom.argument, assignment);
    case AtomKind::SingleEdit:
      return one_substitution_apart(subject, resolve(atom.argument, assignment));
    case AtomKind::InTable:
      return table_or_throw(tables, atom.table_id).entries.count(subject) > 0;
    case AtomKind::InSet:
      return std::binary_search(atom.values.begin(), atom.values.end(), subject);
  }
  throw std::logic_error("unreachable atom kind");
}

Atom ground(const Atom& atom, const std::string& var,
            const std::string& value) {
  Atom out = atom;
  Term replacement = lit_term(value);
  if (out.subject.is_variable && out.subject.text == var) {
    out.subject = replacement;
  }
  if ((out.kind == AtomKind::Equal || out.kind == AtomKind::SingleEdit) &&
      out.argument.is_variable && out.argument.text == var) {
    out.argument = replacement;
  }
  return out;
}

bool atom_is_ground(const Atom& atom) {
  return atom_variables(atom).empty();
}

std::optional<bool> try_decide(const Atom& atom, const TableRegistry& tables) {
  if (!atom_is_ground(atom)) return std::nullopt;
  return eval_atom(atom, {}, tables);
}

std::vector<std::string> single_edit_neighbors(const std::string& word,
                                               const Alphabet& alphabet) {
  std::string w = normalize_name(word);
  if (w.empty()) throw std::invalid_argument("empty word has no neighbors");
  if (!alphabet.covers(w)) {
    throw std::invalid_argument("word '" + w + "' uses characters outside the alphabet");
  }
  std::vector<std::string> out;
  out.reserve((alphabet.size() - 1) * w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::string candidate = w;
    for (char c : alphabet.letters) {
      if (c == w[i]) continue;
      candidate[i] = c;
      out.push_back(candidate);
    }
  }
  return out;
}

namespace {

// Size of the finite set a positive literal generates, without materializing.
std::size_t generator_size(const Atom& atom, const TableRegistry& tables,
                           const Alphabet& alphabet) {
  switch (atom.kind) {
    case AtomKind::Equal:
      return 1;
    case AtomKind::InSet:
      return atom.values.size();
    case AtomKind::SingleEdit:
      return (alphabet.size() - 1) * atom.argument.text.size();
    case AtomKind::InTable:
      return table_or_throw(tables, atom.table_id).entries.size();
  }
  throw std::logic_error("unreachable atom kind");
}

std::vector<std::string> materialize_generator(const Atom& atom,
                                               const TableRegistry& tables,
                                               const Alphabet& alphabet) {
  switch (atom.kind) {
    case AtomKind::Equal:
      return {atom.argument.text};
    case AtomKind::InSet:
      return atom.values;
    case AtomKind::SingleEdit:
      return single_edit_neighbors(atom.argument.text, alphabet);
    case AtomKind::InTable: {
      const NameTable& t = table_or_throw(tables, atom.table_id);
      std::vector<std::string> keys;
      keys.reserve(t.entries.size());
      for (const auto& [name, p] : t.entries) keys.push_back(name);
      return keys;
    }
  }
  throw std::logic_error("unreachable atom kind");
}

}  // namespace

SolutionSet solve(const ConstraintSet& constraints, const TableRegistry& tables,
                  const Alphabet& alphabet, SolveStats* stats) {
  const std::string& y = constraints.subject;
  for (const Literal& lit : constraints.literals) {
    const Atom& a = lit.atom;
    bool subject_is_y = a.subject.is_variable && a.subject.text == y;
    bool argument_is_y = (a.kind == AtomKind::Equal ||
                          a.kind == AtomKind::SingleEdit) &&
                         a.argument.is_variable && a.argument.text == y;
    if (!subject_is_y && !argument_is_y) {
      throw std::invalid_argument("constraint literal does not mention subject " + y);
    }
    // Everything except the subject must be ground before solving.
    if (subject_is_y && argument_is_y) {
      throw std::invalid_argument("literal mentions subject twice: " +
                                  atom_to_string(a));
    }
    if ((subject_is_y && a.kind != AtomKind::InTable &&
         a.kind != AtomKind::InSet && a.argument.is_variable) ||
        (argument_is_y && a.subject.is_variable)) {
      throw std::invalid_argument("literal not grounded: " + atom_to_string(a));
    }
  }

  // Atoms are normalized so the subject variable sits in the subject slot;
  // Equal and SingleEdit are symmetric in their two terms.
  std::vector<Literal> lits;
  lits.reserve(constraints.literals.size());
  for (const Literal& lit : constraints.literals) {
    Literal n = lit;
    if (!n.atom.subject.is_variable) {
      std::swap(n.atom.subject, n.atom.argument);
    }
    lits.push_back(n);
  }

  // Pick the cheapest positive generator, if any.
  int best = -1;
  std::size_t best_size = 0;
  for (std::size_t i = 0; i < lits.size(); ++i) {
    if (!lits[i].positive) continue;
    std::size_t size = generator_size(lits[i].atom, tables, alphabet);
    if (best < 0 || size < best_size) {
      best = static_cast<int>(i);
      best_size = size;
    }
  }

  if (best >= 0) {
    std::vector<std::string> candidates =
        materialize_generator(lits[best].atom, tables, alphabet);
    if (stats) {
      stats->candidates_enumerated = candidates.size();
      stats->smallest_generator = best_size;
    }
    std::vector<std::string> kept;
    for (const std::string& value : candidates) {
      Assignment a{{y, value}};
      bool ok = true;
      for (std::size_t i = 0; i < lits.size(); ++i) {
        if (static_cast<int>(i) == best) continue;
        if (eval_atom(lits[i].atom, a, tables) != lits[i].positive) {
          ok = false;
          break;
        }
      }
      if (ok) kept.push_back(value);
    }
    return SolutionSet::explicit_set(std::move(kept));
  }

  // Only negative literals: complement of everything they exclude. The first
  // negated table literal supplies the base; its entire entry set is excluded
  // extensionally, which keeps the counting rule uniform.
  SolutionSet s;
  s.kind = SolutionSet::Kind::Complement;
  std::set<std::string> excluded;
  for (const Literal& lit : lits) {
    const Atom& a = lit.atom;
    switch (a.kind) {
      case AtomKind::Equal:
        excluded.insert(a.argument.text);
        break;
      case AtomKind::InSet:
        excluded.insert(a.values.begin(), a.values.end());
        break;
      case AtomKind::SingleEdit: {
        std::vector<std::string> nb = single_edit_neighbors(a.argument.text, alphabet);
        excluded.insert(nb.begin(), nb.end());
        break;
      }
      case AtomKind::InTable: {
        const NameTable& t = table_or_throw(tables, a.table_id);
        if (!s.base_table) {
          s.base_table = a.table_id;
        }
        for (const auto& [name, p] : t.entries) excluded.insert(name);
        break;
      }
    }
  }
  if (s.base_table) {
    const NameTable& base = table_or_throw(tables, *s.base_table);
    for (const std::string& v : excluded) {
      if (base.entries.count(v)) {
        s.excluded_in_table.push_back(v);
      } else {
        s.excluded_unseen.push_back(v);
      }
    }
  } else {
    s.excluded_unseen.assign(excluded.begin(), excluded.end());
  }
  return s;
}

Cardinality solution_count(const SolutionSet& s, const TableRegistry& tables) {
  if (s.kind == SolutionSet::Kind::Explicit) {
    return Cardinality::of(s.values.size());
  }
  if (!s.base_table) return Cardinality::infinite();
  const NameTable& t = table_or_throw(tables, *s.base_table);
  if (t.n_unseen.unbounded) return Cardinality::infinite();
  if (s.excluded_unseen.size() > t.n_unseen.count) {
    throw std::invalid_argument("complement excludes more unseen values than table " +
                                t.id + " models");
  }
  std::uint64_t in_table = t.entries.size() - s.excluded_in_table.size();
  std::uint64_t unseen = t.n_unseen.count - s.excluded_unseen.size();
  return Cardinality::of(in_table + unseen);
}

std::string atom_to_string(const Atom& atom) {
  auto term = [](const Term& t) {
    return t.is_variable ? t.text : "\"" + t.text + "\"";
  };
  std::ostringstream out;
  switch (atom.kind) {
    case AtomKind::Equal:
      out << "equal(" << term(atom.subject) << ", " << term(atom.argument) << ")";
      break;
    case AtomKind::SingleEdit:
      out << "singlet(" << term(atom.subject) << ", " << term(atom.argument) << ")";
      break;
    case AtomKind::InTable:
      out << "intable(" << term(atom.subject) << ", " << atom.table_id << ")";
      break;
    case AtomKind::InSet: {
      out << "inset(" << term(atom.subject) << ", {";
      for (std::size_t i = 0; i < atom.values.size(); ++i) {
        if (i) out << ",";
        out << atom.values[i];
      }
      out << "})";
      break;
    }
  }
  return out.str();
}

std::string literal_to_string(const Literal& lit) {
  return (lit.positive ? "" : "!") + atom_to_string(lit.atom);
}

}  // namespace ldve
