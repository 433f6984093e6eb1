#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldve {

// Error raised when inference itself fails (zero-probability evidence,
// unbounded probability mass at a leaf). Distinct from std::invalid_argument,
// which signals caller misuse or malformed input.
class InferenceError : public std::runtime_error {
 public:
  explicit InferenceError(const std::string& what) : std::runtime_error(what) {}
};

// A possibly-unbounded cardinality. Unbounded values arise when a solution
// set is the complement of a finite set within the whole string domain.
struct Cardinality {
  bool unbounded = false;
  std::uint64_t count = 0;

  static Cardinality of(std::uint64_t n) { return Cardinality{false, n}; }
  static Cardinality infinite() { return Cardinality{true, 0}; }
  bool operator==(const Cardinality&) const = default;
};

// A possibly-unbounded probability mass.
struct MassResult {
  bool unbounded = false;
  double value = 0.0;

  static MassResult of(double v) { return MassResult{false, v}; }
  static MassResult infinite() { return MassResult{true, 0.0}; }
};

// Ordered set of characters over which large-domain strings are formed.
struct Alphabet {
  std::string letters;  // sorted, unique, uppercase

  std::size_t size() const { return letters.size(); }
  bool contains(char c) const { return letters.find(c) != std::string::npos; }
  bool covers(const std::string& word) const;
};

Alphabet make_alphabet(const std::string& letters);
const Alphabet& latin_alphabet();  // A..Z

// Uppercases ASCII letters; values of large variables are case-insensitive
// and normalized at every boundary.
std::string normalize_name(const std::string& s);

struct Domain {
  enum class Kind { Small, Large };
  Kind kind = Kind::Small;
  std::vector<std::string> values;  // Small only: ordered, distinct
  Alphabet alphabet;                // Large only: >= 2 characters

  bool is_small() const { return kind == Kind::Small; }
  bool is_large() const { return kind == Kind::Large; }
  bool contains(const std::string& value) const;
};

Domain small_domain(std::vector<std::string> values);
Domain large_domain(Alphabet alphabet);

struct VariableDecl {
  std::string name;
  Domain domain;
};

// Total or partial map from variable name to value.
using Assignment = std::map<std::string, std::string>;

// Finite probability table over names with a residual model for values not
// listed: n_unseen distinct unseen values of probability pnew each. When
// n_unseen is finite, entries + pnew * n_unseen must total 1.
struct NameTable {
  std::string id;
  std::map<std::string, double> entries;  // name -> probability in (0,1]
  double pnew = 0.0;                      // probability of one unseen value
  Cardinality n_unseen;                   // number of distinct unseen values

  double entry_sum() const;
};

using TableRegistry = std::map<std::string, NameTable>;

// Validates the table invariants; throws std::invalid_argument on violation.
void validate_table(const NameTable& table);

// Builds a table directly from per-name probabilities. Used by generators
// and tests that need exact control over the unseen model.
NameTable make_table(std::string id, std::map<std::string, double> entries,
                     double pnew, Cardinality n_unseen);

// Parses line-oriented `NAME WEIGHT` data ('#' starts a comment; extra
// trailing columns are ignored). Weights are normalized so the listed names
// carry `coverage` of the total mass; the rest is split into unseen values
// of probability pnew each, so n_unseen = (1 - coverage) / pnew.
NameTable load_name_table(std::string id, const std::string& text, double pnew,
                          double coverage = 0.9);

// Entry probability, or nullopt when the name is absent (caller decides
// whether pnew applies). Lookup is case-normalized.
std::optional<double> table_lookup(const NameTable& table,
                                   const std::string& value);

// Mass of the unseen region after removing `excluded_unseen_count` distinct
// unseen values: pnew * (n_unseen - excluded). Unbounded tables propagate
// the unbounded sentinel.
MassResult table_residual_mass(const NameTable& table,
                               std::uint64_t excluded_unseen_count = 0);

}  // namespace ldve
