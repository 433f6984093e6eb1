#include "ldve/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace ldve {

bool Alphabet::covers(const std::string& word) const {
  return std::all_of(word.begin(), word.end(),
                     [this](char c) { return contains(c); });
}

Alphabet make_alphabet(const std::string& letters) {
  std::string up = normalize_name(letters);
  std::sort(up.begin(), up.end());
  up.erase(std::unique(up.begin(), up.end()), up.end());
  if (up.size() < 2) {
    throw std::invalid_argument("alphabet needs at least 2 distinct characters");
  }
  return Alphabet{up};
}

const Alphabet& latin_alphabet() {
  static const Alphabet a = make_alphabet("ABCDEFGHIJKLMNOPQRSTUVWXYZ");
  return a;
}

std::string normalize_name(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

bool Domain::contains(const std::string& value) const {
  if (kind == Kind::Small) {
    return std::find(values.begin(), values.end(), value) != values.end();
  }
  return !value.empty() && alphabet.covers(normalize_name(value));
}

Domain small_domain(std::vector<std::string> values) {
  if (values.empty()) {
    throw std::invalid_argument("small domain needs at least one value");
  }
  std::vector<std::string> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("small domain values must be distinct");
  }
  Domain d;
  d.kind = Domain::Kind::Small;
  d.values = std::move(values);
  return d;
}

Domain large_domain(Alphabet alphabet) {
  Domain d;
  d.kind = Domain::Kind::Large;
  d.alphabet = std::move(alphabet);
  return d;
}

double NameTable::entry_sum() const {
  double sum = 0.0;
  for (const auto& [name, p] : entries) sum += p;
  return sum;
}

void validate_table(const NameTable& table) {
  double sum = 0.0;
  for (const auto& [name, p] : table.entries) {
    if (name.empty()) throw std::invalid_argument("table entry with empty name");
    if (name != normalize_name(name)) {
      throw std::invalid_argument("table entry not case-normalized: " + name);
    }
    if (!(p > 0.0) || p > 1.0) {
      throw std::invalid_argument("table probability outside (0,1] for " + name);
    }
    sum += p;
  }
  if (sum > 1.0 + 1e-9) {
    throw std::invalid_argument("table " + table.id + " entries sum to " +
                                std::to_string(sum) + " > 1");
  }
  if (!(table.pnew > 0.0) || table.pnew >= 1.0) {
    throw std::invalid_argument("pnew must lie in (0,1)");
  }
  if (!table.n_unseen.unbounded) {
    double total = sum + table.pnew * static_cast<double>(table.n_unseen.count);
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("table " + table.id +
                                  " does not normalize: entries + residual = " +
                                  std::to_string(total));
    }
  }
}

NameTable make_table(std::string id, std::map<std::string, double> entries,
                     double pnew, Cardinality n_unseen) {
  NameTable t;
  t.id = std::move(id);
  t.entries = std::move(entries);
  t.pnew = pnew;
  t.n_unseen = n_unseen;
  validate_table(t);
  return t;
}

NameTable load_name_table(std::string id, const std::string& text, double pnew,
                          double coverage) {
  if (!(coverage > 0.0) || coverage > 1.0) {
    throw std::invalid_argument("coverage must lie in (0,1]");
  }
  if (!(pnew > 0.0) || pnew >= 1.0) {
    throw std::invalid_argument("pnew must lie in (0,1)");
  }
  if (coverage < 1.0 && pnew >= 1.0 - coverage) {
    throw std::invalid_argument(
        "pnew >= residual mass 1 - coverage: no room for unseen values");
  }

  std::map<std::string, double> weights;
  double weight_sum = 0.0;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    std::string::size_type hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string name;
    if (!(fields >> name)) continue;  // blank line
    double weight = 0.0;
    if (!(fields >> weight)) {
      throw std::invalid_argument("table " + id + " line " +
                                  std::to_string(line_no) + ": missing weight");
    }
    if (!(weight > 0.0)) {
      throw std::invalid_argument("table " + id + " line " +
                                  std::to_string(line_no) +
                                  ": weight must be positive");
    }
    std::string key = normalize_name(name);
    if (!weights.emplace(key, weight).second) {
      throw std::invalid_argument("table " + id + " line " +
                                  std::to_string(line_no) +
                                  ": duplicate name " + key);
    }
    weight_sum += weight;
  }
  if (weights.empty()) {
    throw std::invalid_argument("table " + id + " has no entries");
  }

  NameTable t;
  t.id = std::move(id);
  t.pnew = pnew;
  for (const auto& [name, w] : weights) {
    t.entries[name] = w / weight_sum * coverage;
  }
  if (coverage == 1.0) {
    t.n_unseen = Cardinality::of(0);
  } else {
    double exact = (1.0 - coverage) / pnew;
    t.n_unseen = Cardinality::of(static_cast<std::uint64_t>(std::llround(exact)));
  }
  validate_table(t);  // rejects pnew that does not evenly tile the residual
  return t;
}

std::optional<double> table_lookup(const NameTable& table,
                                   const std::string& value) {
  auto it = table.entries.find(normalize_name(value));
  if (it == table.entries.end()) return std::nullopt;
  return it->second;
}

MassResult table_residual_mass(const NameTable& table,
                               std::uint64_t excluded_unseen_count) {
  if (table.n_unseen.unbounded) return MassResult::infinite();
  if (excluded_unseen_count > table.n_unseen.count) {
    throw std::invalid_argument(
        "excluded unseen count exceeds n_unseen for table " + table.id);
  }
  return MassResult::of(
      table.pnew *
      static_cast<double>(table.n_unseen.count - excluded_unseen_count));
}

}  // namespace ldve
