#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ldve/domain.hpp"

namespace ldve {

// Either a variable reference or a literal string. Literals are stored
// case-normalized.
struct Term {
  bool is_variable = false;
  std::string text;

  bool operator==(const Term&) const = default;
  bool operator<(const Term& o) const {
    return std::tie(is_variable, text) < std::tie(o.is_variable, o.text);
  }
};

Term var_term(std::string name);
Term lit_term(std::string value);

enum class AtomKind { Equal, SingleEdit, InTable, InSet };

// A grounded-or-groundable predicate over string values:
//   Equal(a, b)        the two terms have the same value
//   SingleEdit(a, b)   equal length, differ in exactly one position
//   InTable(a, t)      a is an entry of name table t
//   InSet(a, S)        a belongs to the finite set S
struct Atom {
  AtomKind kind = AtomKind::Equal;
  Term subject;
  Term argument;                   // Equal / SingleEdit
  std::string table_id;            // InTable
  std::vector<std::string> values; // InSet: sorted, distinct, normalized

  bool operator==(const Atom&) const = default;
  bool operator<(const Atom& o) const;
};

Atom equal_atom(Term subject, Term argument);
Atom single_edit_atom(Term subject, Term argument);
Atom in_table_atom(Term subject, std::string table_id);
Atom in_set_atom(Term subject, std::vector<std::string> values);

// Variables mentioned by the atom (subject and argument terms).
std::vector<std::string> atom_variables(const Atom& atom);
bool atom_mentions(const Atom& atom, const std::string& var);

struct Literal {
  Atom atom;
  bool positive = true;

  bool operator==(const Literal&) const = default;
  bool operator<(const Literal& o) const {
    return std::tie(atom, positive) < std::tie(o.atom, o.positive);
  }
};

// Conjunction of literals over one subject variable.
struct ConstraintSet {
  std::string subject;
  std::vector<Literal> literals;  // kept sorted for deterministic output
};

// Adds a literal; drops exact duplicates. Returns false when the new literal
// contradicts an existing one (same atom, opposite polarity).
bool add_literal(ConstraintSet& cs, const Literal& lit);

// The set of values of one large variable satisfying a constraint set:
// either listed outright, or everything except finitely many exclusions.
// For complements the exclusions are partitioned against the base table's
// entries; with no table context the base is the whole string domain and all
// exclusions live in excluded_unseen.
struct SolutionSet {
  enum class Kind { Explicit, Complement };
  Kind kind = Kind::Explicit;
  std::vector<std::string> values;             // Explicit: sorted, distinct
  std::optional<std::string> base_table;       // Complement: nullopt = whole domain
  std::vector<std::string> excluded_in_table;  // sorted
  std::vector<std::string> excluded_unseen;    // sorted

  static SolutionSet explicit_set(std::vector<std::string> values);
};

// Evaluates a fully assigned atom. Every variable the atom mentions must be
// present in the assignment. InTable needs the table registry.
bool eval_atom(const Atom& atom, const Assignment& assignment,
               const TableRegistry& tables);

// Substitutes a literal value for every occurrence of `var` in the atom.
// Atoms that do not mention the variable are returned unchanged.
Atom ground(const Atom& atom, const std::string& var, const std::string& value);

bool atom_is_ground(const Atom& atom);

// Decides a variable-free atom; nullopt when the atom still mentions a
// variable.
std::optional<bool> try_decide(const Atom& atom, const TableRegistry& tables);

// All strings at substitution distance exactly 1 from `word`: every letter
// replaced by each other alphabet letter. Size is (|alphabet|-1) * |word|.
std::vector<std::string> single_edit_neighbors(const std::string& word,
                                               const Alphabet& alphabet);

// Instrumentation for the enumeration bound on solve.
struct SolveStats {
  std::size_t candidates_enumerated = 0;
  std::size_t smallest_generator = 0;
};

// Turns a conjunction of grounded literals into a solution set. With at
// least one positive literal the smallest finite generator is enumerated and
// filtered by the remaining literals; with only negative literals the result
// is a complement of the excluded values. Unsatisfiable inputs yield the
// empty explicit set.
SolutionSet solve(const ConstraintSet& constraints, const TableRegistry& tables,
                  const Alphabet& alphabet, SolveStats* stats = nullptr);

// Number of values in the solution set. Complements over the whole string
// domain (or over a table with an unbounded unseen region) are unbounded.
Cardinality solution_count(const SolutionSet& s, const TableRegistry& tables);

// Deterministic rendering, e.g. `!singlet(Afname, "DAVID")`.
std::string literal_to_string(const Literal& lit);
std::string atom_to_string(const Atom& atom);

}  // namespace ldve
