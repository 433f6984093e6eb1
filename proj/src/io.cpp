#include "ldve/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ldve/oracle.hpp"

namespace ldve {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

std::string dirname_of(const std::string& path) {
  std::string::size_type slash = path.find_last_of('/');
  if (slash == std::string::npos) return ".";
  if (slash == 0) return "/";
  return path.substr(0, slash);
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument(where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

// ---------------------------------------------------------------------------
// Terms, atoms, labels, trees <-> JSON

Term parse_term(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "term must be {\"var\":...} or {\"value\":...}");
  if (j.contains("var")) return var_term(j.at("var").get<std::string>());
  if (j.contains("value")) return lit_term(j.at("value").get<std::string>());
  fail(where, "term needs 'var' or 'value'");
}

json term_to_json(const Term& t) {
  return t.is_variable ? json{{"var", t.text}} : json{{"value", t.text}};
}

Atom parse_atom(const json& j, const std::string& where) {
  std::string kind = field(j, "kind", where).get<std::string>();
  Term subject = parse_term(field(j, "subject", where), where + ".subject");
  if (kind == "equal") {
    return equal_atom(subject, parse_term(field(j, "arg", where), where + ".arg"));
  }
  if (kind == "singlet") {
    return single_edit_atom(subject,
                            parse_term(field(j, "arg", where), where + ".arg"));
  }
  if (kind == "intable") {
    return in_table_atom(subject, field(j, "table", where).get<std::string>());
  }
  if (kind == "inset") {
    return in_set_atom(
        subject, field(j, "values", where).get<std::vector<std::string>>());
  }
  fail(where, "unknown atom kind '" + kind + "'");
}

json atom_to_json(const Atom& a) {
  json j;
  j["subject"] = term_to_json(a.subject);
  switch (a.kind) {
    case AtomKind::Equal:
      j["kind"] = "equal";
      j["arg"] = term_to_json(a.argument);
      break;
    case AtomKind::SingleEdit:
      j["kind"] = "singlet";
      j["arg"] = term_to_json(a.argument);
      break;
    case AtomKind::InTable:
      j["kind"] = "intable";
      j["table"] = a.table_id;
      break;
    case AtomKind::InSet:
      j["kind"] = "inset";
      j["values"] = a.values;
      break;
  }
  return j;
}

LabelPtr parse_label(const json& j, const std::string& where) {
  if (j.is_number()) {
    double v = j.get<double>();
    if (v < 0.0) fail(where, "negative probability label");
    return label_const(v);
  }
  if (!j.is_object()) fail(where, "label must be a number or an object");
  if (j.contains("prsing")) {
    return label_prsing(parse_term(j.at("prsing"), where + ".prsing"));
  }
  if (j.contains("pdf")) {
    const json& p = j.at("pdf");
    return label_table_pdf(field(p, "var", where + ".pdf").get<std::string>(),
                           field(p, "table", where + ".pdf").get<std::string>());
  }
  if (j.contains("pnew")) {
    return label_pnew(j.at("pnew").get<std::string>());
  }
  if (j.contains("product") || j.contains("sum")) {
    bool is_product = j.contains("product");
    const json& parts = is_product ? j.at("product") : j.at("sum");
    if (!parts.is_array()) fail(where, "product/sum must be an array");
    std::vector<LabelPtr> out;
    int i = 0;
    for (const json& part : parts) {
      out.push_back(parse_label(part, where + "[" + std::to_string(i++) + "]"));
    }
    return is_product ? label_product(std::move(out)) : label_sum(std::move(out));
  }
  fail(where, "unknown label form");
}

json label_to_json(const LabelExpr& l) {
  switch (l.kind) {
    case LabelExpr::Kind::Const:
      return json(l.value);
    case LabelExpr::Kind::PrSing:
      return json{{"prsing", term_to_json(l.term)}};
    case LabelExpr::Kind::TablePdf:
      return json{{"pdf", {{"var", l.variable}, {"table", l.table_id}}}};
    case LabelExpr::Kind::PNew:
      return json{{"pnew", l.table_id}};
    case LabelExpr::Kind::Product:
    case LabelExpr::Kind::Sum: {
      json parts = json::array();
      for (const LabelPtr& p : l.parts) parts.push_back(label_to_json(*p));
      return l.kind == LabelExpr::Kind::Product ? json{{"product", parts}}
                                                : json{{"sum", parts}};
    }
  }
  throw std::logic_error("unreachable label kind");
}

NodePtr parse_tree(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "tree node must be an object");
  if (j.contains("leaf")) return leaf(parse_label(j.at("leaf"), where + ".leaf"));
  if (j.contains("split")) {
    std::string var = j.at("split").get<std::string>();
    const json& branches = field(j, "branches", where);
    if (!branches.is_array() || branches.empty()) {
      fail(where, "split needs a nonempty 'branches' array");
    }
    std::vector<SmallBranch> out;
    int i = 0;
    for (const json& b : branches) {
      std::string bw = where + ".branches[" + std::to_string(i++) + "]";
      SmallBranch sb;
      sb.values = field(b, "values", bw).get<std::vector<std::string>>();
      sb.child = parse_tree(field(b, "node", bw), bw + ".node");
      out.push_back(std::move(sb));
    }
    NodePtr otherwise;
    if (j.contains("else")) otherwise = parse_tree(j.at("else"), where + ".else");
    return small_split(std::move(var), std::move(out), std::move(otherwise));
  }
  if (j.contains("pred")) {
    Atom atom = parse_atom(j.at("pred"), where + ".pred");
    return pred_split(std::move(atom),
                      parse_tree(field(j, "yes", where), where + ".yes"),
                      parse_tree(field(j, "no", where), where + ".no"));
  }
  fail(where, "tree node needs 'leaf', 'split' or 'pred'");
}

json tree_to_json(const NodePtr& node) {
  switch (node->kind) {
    case TreeNode::Kind::Leaf:
      return json{{"leaf", label_to_json(*node->label)}};
    case TreeNode::Kind::SmallSplit: {
      json branches = json::array();
      for (const SmallBranch& b : node->branches) {
        branches.push_back({{"values", b.values}, {"node", tree_to_json(b.child)}});
      }
      json j{{"split", node->variable}, {"branches", branches}};
      if (node->otherwise) j["else"] = tree_to_json(node->otherwise);
      return j;
    }
    case TreeNode::Kind::PredSplit:
      return json{{"pred", atom_to_json(node->atom)},
                  {"yes", tree_to_json(node->yes)},
                  {"no", tree_to_json(node->no)}};
  }
  throw std::logic_error("unreachable node kind");
}

// ---------------------------------------------------------------------------
// Network files

NameTable parse_table_decl(const json& j, const ParseOptions& opts,
                           const std::string& where) {
  std::string id = field(j, "id", where).get<std::string>();
  if (j.contains("entries")) {
    std::map<std::string, double> entries;
    for (const auto& [name, p] : j.at("entries").items()) {
      entries[normalize_name(name)] = p.get<double>();
    }
    Cardinality n_unseen = Cardinality::infinite();
    const json& nu = field(j, "n_unseen", where);
    if (nu.is_string() && nu.get<std::string>() == "unbounded") {
      n_unseen = Cardinality::infinite();
    } else {
      n_unseen = Cardinality::of(nu.get<std::uint64_t>());
    }
    return make_table(id, std::move(entries),
                      field(j, "pnew", where).get<double>(), n_unseen);
  }
  double pnew = field(j, "pnew", where).get<double>();
  double coverage = j.value("coverage", 0.9);
  std::string text;
  if (j.contains("inline")) {
    text = j.at("inline").get<std::string>();
  } else if (j.contains("path")) {
    std::string path = j.at("path").get<std::string>();
    if (!path.empty() && path[0] != '/' && !opts.base_dir.empty()) {
      path = opts.base_dir + "/" + path;
    }
    text = read_file(path);
  } else {
    fail(where, "table needs 'entries', 'inline' or 'path'");
  }
  return load_name_table(id, text, pnew, coverage);
}

// Probes CPD normalization where the parent context is small-enumerable.
void check_cpd_normalization(const Network& net, const ParseOptions& opts) {
  auto index = net.variable_index();
  EvalEnv env = net.env(index);
  for (const auto& [child, cpd] : net.cpds) {
    const VariableDecl& decl = net.variable(child);
    std::vector<const VariableDecl*> parents;
    bool enumerable = true;
    std::size_t combos = 1;
    for (const std::string& p : cpd.scope) {
      if (p == child) continue;
      const VariableDecl& pd = net.variable(p);
      if (pd.domain.is_large()) {
        enumerable = false;
        break;
      }
      parents.push_back(&pd);
      combos *= pd.domain.values.size();
    }
    if (!enumerable || combos > 4096) continue;

    std::vector<std::size_t> cursor(parents.size(), 0);
    bool done = false;
    while (!done) {
      Factor specialized = cpd;
      std::ostringstream at;
      for (std::size_t i = 0; i < parents.size(); ++i) {
        const std::string& value = parents[i]->domain.values[cursor[i]];
        specialized = condition(specialized, parents[i]->name, value, env);
        if (i) at << ", ";
        at << parents[i]->name << "=" << value;
      }
      double sum = 0.0;
      bool computed = true;
      if (decl.domain.is_small()) {
        for (const std::string& value : decl.domain.values) {
          sum += evaluate(specialized, {{child, value}}, env);
        }
      } else {
        try {
          Factor summed = sum_out_large(specialized, child, env);
          sum = evaluate(summed, {}, env);
        } catch (const InferenceError&) {
          computed = false;  // unbounded mass: nothing to check
        }
      }
      if (computed && std::abs(sum - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg << "CPD for " << child << " sums to " << format_double(sum);
        if (!parents.empty()) msg << " at " << at.str();
        if (opts.strict) throw std::invalid_argument(msg.str());
        if (opts.warnings) opts.warnings->push_back(msg.str());
      }
      done = true;
      for (std::size_t i = 0; i < cursor.size(); ++i) {
        if (++cursor[i] < parents[i]->domain.values.size()) {
          done = false;
          break;
        }
        cursor[i] = 0;
      }
      if (parents.empty()) break;
    }
  }
}

}  // namespace

Network parse_network(const std::string& text, const ParseOptions& opts) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("network spec: ") + e.what());
  }
  Network net;
  net.alphabet = make_alphabet(j.value("alphabet", "ABCDEFGHIJKLMNOPQRSTUVWXYZ"));

  int i = 0;
  for (const json& v : field(j, "variables", "network")) {
    std::string where = "variables[" + std::to_string(i++) + "]";
    std::string name = field(v, "name", where).get<std::string>();
    std::string kind = field(v, "kind", where).get<std::string>();
    if (kind == "small") {
      net.variables.push_back(
          {name, small_domain(
                     field(v, "values", where).get<std::vector<std::string>>())});
    } else if (kind == "large") {
      Alphabet alphabet = v.contains("alphabet")
                              ? make_alphabet(v.at("alphabet").get<std::string>())
                              : net.alphabet;
      net.variables.push_back({name, large_domain(alphabet)});
    } else {
      fail(where, "kind must be 'small' or 'large'");
    }
  }

  if (j.contains("tables")) {
    i = 0;
    for (const json& t : j.at("tables")) {
      std::string where = "tables[" + std::to_string(i++) + "]";
      NameTable table = parse_table_decl(t, opts, where);
      std::string id = table.id;
      if (!net.tables.emplace(id, std::move(table)).second) {
        fail(where, "duplicate table id " + id);
      }
    }
  }

  i = 0;
  for (const json& c : field(j, "cpds", "network")) {
    std::string where = "cpds[" + std::to_string(i++) + "]";
    std::string child = field(c, "child", where).get<std::string>();
    std::vector<std::string> scope =
        field(c, "parents", where).get<std::vector<std::string>>();
    scope.push_back(child);
    Factor f = make_factor(std::move(scope),
                           parse_tree(field(c, "tree", where), where + ".tree"));
    if (!net.cpds.emplace(child, std::move(f)).second) {
      fail(where, "duplicate CPD for " + child);
    }
  }

  // Reference checks: tables named by trees must exist.
  for (const auto& [child, cpd] : net.cpds) {
    auto check_tables = [&](auto&& self, const NodePtr& node) -> void {
      if (node->kind == TreeNode::Kind::Leaf) {
        auto check_label = [&](auto&& lself, const LabelExpr& l) -> void {
          if ((l.kind == LabelExpr::Kind::TablePdf ||
               l.kind == LabelExpr::Kind::PNew) &&
              !net.tables.count(l.table_id)) {
            fail("cpd " + child, "undeclared table " + l.table_id);
          }
          for (const LabelPtr& p : l.parts) lself(lself, *p);
        };
        check_label(check_label, *node->label);
        return;
      }
      if (node->kind == TreeNode::Kind::PredSplit) {
        if (node->atom.kind == AtomKind::InTable &&
            !net.tables.count(node->atom.table_id)) {
          fail("cpd " + child, "undeclared table " + node->atom.table_id);
        }
        self(self, node->yes);
        self(self, node->no);
        return;
      }
      for (const SmallBranch& b : node->branches) self(self, b.child);
      if (node->otherwise) self(self, node->otherwise);
    };
    check_tables(check_tables, cpd.root);
  }

  validate_network(net);
  check_cpd_normalization(net, opts);
  return net;
}

std::string serialize_network(const Network& net) {
  json j;
  j["alphabet"] = net.alphabet.letters;
  json variables = json::array();
  for (const VariableDecl& v : net.variables) {
    if (v.domain.is_small()) {
      variables.push_back(
          {{"name", v.name}, {"kind", "small"}, {"values", v.domain.values}});
    } else {
      variables.push_back({{"name", v.name},
                           {"kind", "large"},
                           {"alphabet", v.domain.alphabet.letters}});
    }
  }
  j["variables"] = variables;

  json tables = json::array();
  for (const auto& [id, t] : net.tables) {
    json entries;
    for (const auto& [name, p] : t.entries) entries[name] = p;
    json tj{{"id", id}, {"pnew", t.pnew}, {"entries", entries}};
    if (t.n_unseen.unbounded) {
      tj["n_unseen"] = "unbounded";
    } else {
      tj["n_unseen"] = t.n_unseen.count;
    }
    tables.push_back(tj);
  }
  j["tables"] = tables;

  json cpds = json::array();
  for (const auto& [child, cpd] : net.cpds) {
    json parents = json::array();
    for (const std::string& v : cpd.scope) {
      if (v != child) parents.push_back(v);
    }
    cpds.push_back(
        {{"child", child}, {"parents", parents}, {"tree", tree_to_json(cpd.root)}});
  }
  j["cpds"] = cpds;
  return j.dump(2) + "\n";
}

LinkageConfig parse_linkage_config(const std::string& text,
                                   const ParseOptions& opts) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("linkage config: ") + e.what());
  }
  LinkageConfig cfg;
  cfg.alphabet = make_alphabet(j.value("alphabet", "ABCDEFGHIJKLMNOPQRSTUVWXYZ"));
  cfg.pnew = j.value("pnew", 1e-4);
  int i = 0;
  for (const json& t : field(j, "tables", "config")) {
    std::string where = "tables[" + std::to_string(i++) + "]";
    json decl = t;
    if (!decl.contains("pnew")) decl["pnew"] = cfg.pnew;
    NameTable table = parse_table_decl(decl, opts, where);
    std::string id = table.id;
    if (!cfg.tables.emplace(id, std::move(table)).second) {
      fail(where, "duplicate table id " + id);
    }
  }
  cfg.male_table = field(j, "male_table", "config").get<std::string>();
  cfg.female_table = field(j, "female_table", "config").get<std::string>();
  cfg.sex_prior =
      field(j, "sex_prior", "config").get<std::map<std::string, double>>();
  cfg.sloppy_prior =
      field(j, "sloppy_prior", "config").get<std::map<std::string, double>>();
  for (const auto& [key, dist] : field(j, "error_prior", "config").items()) {
    cfg.error_prior[key] = dist.get<std::map<std::string, double>>();
  }
  cfg.prior_same = field(j, "prior_same", "config").get<double>();
  cfg.phone_space = j.value("phone_space", 1e7);
  validate_config(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Posterior JSON (17 significant digits, bit-faithful round trip)

namespace {

std::string probability_repr(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Inverse of literal_to_string, for posterior round-trips. The rendered
// grammar is `!`? kind `(` term `, ` argument `)` with quoted literals.
Literal parse_literal_string(const std::string& text) {
  std::size_t pos = 0;
  auto expect = [&](const std::string& token) {
    if (text.compare(pos, token.size(), token) != 0) {
      throw std::invalid_argument("bad literal '" + text + "' at offset " +
                                  std::to_string(pos));
    }
    pos += token.size();
  };
  auto until = [&](char stop) {
    std::size_t end = text.find(stop, pos);
    if (end == std::string::npos) {
      throw std::invalid_argument("bad literal '" + text + "'");
    }
    std::string out = text.substr(pos, end - pos);
    pos = end;
    return out;
  };
  auto term = [&]() -> Term {
    if (text[pos] == '"') {
      ++pos;
      std::string value = until('"');
      ++pos;
      return lit_term(value);
    }
    std::size_t end = text.find_first_of(",)", pos);
    if (end == std::string::npos) {
      throw std::invalid_argument("bad literal '" + text + "'");
    }
    std::string name = text.substr(pos, end - pos);
    pos = end;
    return var_term(name);
  };

  Literal lit;
  lit.positive = true;
  if (!text.empty() && text[0] == '!') {
    lit.positive = false;
    ++pos;
  }
  std::string kind = until('(');
  expect("(");
  Term subject = term();
  expect(", ");
  if (kind == "equal") {
    lit.atom = equal_atom(subject, term());
    expect(")");
  } else if (kind == "singlet") {
    lit.atom = single_edit_atom(subject, term());
    expect(")");
  } else if (kind == "intable") {
    lit.atom = in_table_atom(subject, until(')'));
    expect(")");
  } else if (kind == "inset") {
    expect("{");
    std::string body = until('}');
    pos += 1;
    expect(")");
    std::vector<std::string> values;
    std::istringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(item);
    lit.atom = in_set_atom(subject, std::move(values));
  } else {
    throw std::invalid_argument("unknown literal kind '" + kind + "'");
  }
  return lit;
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

}  // namespace

std::string posterior_to_json(const Posterior& p) {
  std::ostringstream out;
  out << "{";
  if (p.complement) {
    const PosteriorComplement& c = *p.complement;
    out << "\"complement\":{\"count\":";
    if (c.count.unbounded) {
      out << "\"unbounded\"";
    } else {
      out << c.count.count;
    }
    out << ",\"description\":[";
    for (std::size_t i = 0; i < c.description.literals.size(); ++i) {
      if (i) out << ",";
      out << "\"" << json_escape(literal_to_string(c.description.literals[i]))
          << "\"";
    }
    out << "],\"per_value\":" << probability_repr(c.per_value)
        << ",\"total_mass\":" << probability_repr(c.total_mass) << "},";
  }
  out << "\"explicit\":{";
  bool first = true;
  for (const auto& [value, prob] : p.explicit_values) {
    if (!first) out << ",";
    first = false;
    out << "\"" << json_escape(value) << "\":" << probability_repr(prob);
  }
  out << "},\"variable\":\"" << json_escape(p.variable) << "\"}";
  return out.str();
}

Posterior posterior_from_json(const std::string& text) {
  json j = json::parse(text);
  Posterior p;
  p.variable = j.at("variable").get<std::string>();
  for (const auto& [value, prob] : j.at("explicit").items()) {
    p.explicit_values[value] = prob.get<double>();
  }
  if (j.contains("complement")) {
    const json& c = j.at("complement");
    PosteriorComplement block;
    if (c.at("count").is_string()) {
      block.count = Cardinality::infinite();
    } else {
      block.count = Cardinality::of(c.at("count").get<std::uint64_t>());
    }
    block.per_value = c.at("per_value").get<double>();
    block.total_mass = c.at("total_mass").get<double>();
    block.description.subject = p.variable;
    for (const json& lit : c.at("description")) {
      add_literal(block.description,
                  parse_literal_string(lit.get<std::string>()));
    }
    p.complement = std::move(block);
  }
  return p;
}

// ---------------------------------------------------------------------------
// CLI

namespace {

void print_posterior_human(const Posterior& p, std::ostream& out) {
  out << "posterior of " << p.variable << "\n";
  std::size_t width = 0;
  for (const auto& [value, prob] : p.explicit_values) {
    width = std::max(width, value.size());
  }
  for (const auto& [value, prob] : p.explicit_values) {
    out << "  " << std::left << std::setw(static_cast<int>(width) + 2) << value
        << format_double(prob) << "\n";
  }
  if (p.complement) {
    const PosteriorComplement& c = *p.complement;
    out << "  complement (";
    if (c.count.unbounded) {
      out << "unbounded";
    } else {
      out << c.count.count << " values";
    }
    out << ", per-value " << format_double(c.per_value) << ", total "
        << format_double(c.total_mass) << ")\n";
    if (!c.description.literals.empty()) {
      out << "    ";
      for (std::size_t i = 0; i < c.description.literals.size(); ++i) {
        if (i) out << " & ";
        out << literal_to_string(c.description.literals[i]);
      }
      out << "\n";
    }
  }
}

void print_traces(const std::vector<SumOutTrace>& traces, std::ostream& out) {
  for (const SumOutTrace& trace : traces) {
    out << "sum out " << trace.variable << ":\n";
    for (const LeafMassRecord& r : trace.leaves) {
      out << "  mass[";
      if (r.context.literals.empty()) {
        out << "unconstrained";
      } else {
        for (std::size_t i = 0; i < r.context.literals.size(); ++i) {
          if (i) out << " & ";
          out << literal_to_string(r.context.literals[i]);
        }
      }
      out << "] = " << format_double(r.mass);
      if (r.counted) {
        out << " (";
        if (r.solutions.unbounded) {
          out << "unbounded values";
        } else {
          out << r.solutions.count << " values";
        }
        out << ")";
      }
      out << "\n";
    }
  }
}

struct QueryArgs {
  std::string net_path;
  std::vector<std::string> evidence;
  std::string query;
  std::string order;
  bool json_output = false;
  bool strict = false;
  bool verbose = false;
};

int run_query(const QueryArgs& args, std::ostream& out, std::ostream& err) {
  ParseOptions opts;
  opts.base_dir = dirname_of(args.net_path);
  opts.strict = args.strict;
  std::vector<std::string> warnings;
  opts.warnings = &warnings;
  Network net = parse_network(read_file(args.net_path), opts);
  for (const std::string& w : warnings) err << "warning: " << w << "\n";

  Assignment evidence;
  for (const std::string& pair : args.evidence) {
    std::string::size_type eq = pair.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("evidence must be VAR=VALUE: " + pair);
    }
    evidence[pair.substr(0, eq)] = pair.substr(eq + 1);
  }

  QueryOptions qopts;
  if (!args.order.empty()) {
    std::istringstream ss(args.order);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) qopts.order.push_back(item);
    }
  }
  std::vector<SumOutTrace> traces;
  if (args.verbose) qopts.traces = &traces;

  Posterior p = posterior(net, evidence, args.query, qopts);
  if (args.verbose) print_traces(traces, out);
  if (args.json_output) {
    out << posterior_to_json(p) << "\n";
  } else {
    print_posterior_human(p, out);
  }
  return 0;
}

struct OddsArgs {
  std::string config_path;
  std::string x_fname;
  std::string y_fname;
  std::string x_phone;
  std::string y_phone;
  bool json_output = false;
  bool verbose = false;
};

int run_odds(const OddsArgs& args, std::ostream& out, std::ostream& err) {
  ParseOptions opts;
  opts.base_dir = dirname_of(args.config_path);
  LinkageConfig cfg = parse_linkage_config(read_file(args.config_path), opts);
  RecordDesc x{args.x_fname, args.x_phone.empty()
                                 ? std::nullopt
                                 : std::optional<std::string>(args.x_phone)};
  RecordDesc y{args.y_fname, args.y_phone.empty()
                                 ? std::nullopt
                                 : std::optional<std::string>(args.y_phone)};
  OddsBreakdown breakdown;
  double value = odds(x, y, cfg, &breakdown);
  (void)err;
  if (args.verbose) print_traces(breakdown.same_traces, out);
  if (args.json_output) {
    out << "{\"diff_likelihood\":" << probability_repr(breakdown.diff_likelihood)
        << ",\"odds\":" << probability_repr(value)
        << ",\"prior_ratio\":" << probability_repr(breakdown.prior_ratio)
        << ",\"same_likelihood\":" << probability_repr(breakdown.same_likelihood)
        << "}\n";
  } else {
    out << "odds(" << normalize_name(args.x_fname) << ", "
        << normalize_name(args.y_fname) << ") = " << format_double(value) << "\n";
    out << "  P(desc | same) = " << format_double(breakdown.same_likelihood)
        << "\n";
    out << "  P(desc | diff) = " << format_double(breakdown.diff_likelihood)
        << "\n";
    out << "  prior ratio    = " << format_double(breakdown.prior_ratio) << "\n";
  }
  return 0;
}

struct CheckArgs {
  int seeds = 20;
  int max_vars = 6;
  double tv_limit = 1e-9;
};

int run_check(const CheckArgs& args, std::ostream& out) {
  NetworkShape shape;
  shape.max_variables = args.max_vars;
  int failures = 0;
  double worst = 0.0;
  for (int seed = 1; seed <= args.seeds; ++seed) {
    GeneratedNetwork gen = random_network(static_cast<std::uint64_t>(seed), shape);
    Assignment evidence = random_evidence(static_cast<std::uint64_t>(seed), gen);
    std::map<std::string, Posterior> expected =
        oracle_all_posteriors(gen.net, gen.universe, evidence);
    double max_tv = 0.0;
    for (const auto& [var, oracle_post] : expected) {
      Posterior engine_post = posterior(gen.net, evidence, var);
      const VariableDecl& decl = gen.net.variable(var);
      const std::vector<std::string>& universe =
          decl.domain.is_small() ? decl.domain.values : gen.universe.of(var);
      max_tv = std::max(max_tv,
                        total_variation(engine_post, oracle_post, universe));
    }
    worst = std::max(worst, max_tv);
    bool ok = max_tv <= args.tv_limit;
    if (!ok) ++failures;
    out << "seed " << seed << ": " << expected.size()
        << " queries, max TV " << format_double(max_tv)
        << (ok ? "" : "  FAIL") << "\n";
  }
  out << "check: " << (args.seeds - failures) << "/" << args.seeds
      << " seeds within " << format_double(args.tv_limit) << " (worst "
      << format_double(worst) << ")\n";
  return failures == 0 ? 0 : 2;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Exact Bayesian inference over huge discrete domains"};
  app.require_subcommand(1);

  QueryArgs query_args;
  CLI::App* query_cmd =
      app.add_subcommand("query", "Posterior of one variable given evidence");
  query_cmd->add_option("--net", query_args.net_path, "network spec file")
      ->required();
  query_cmd->add_option("--evidence", query_args.evidence,
                        "observed values as VAR=VALUE");
  query_cmd->add_option("--query", query_args.query, "query variable")
      ->required();
  query_cmd->add_option("--order", query_args.order,
                        "comma-separated elimination order");
  query_cmd->add_flag("--json", query_args.json_output, "JSON output");
  query_cmd->add_flag("--strict", query_args.strict,
                      "treat non-normalized CPDs as errors");
  query_cmd->add_flag("--verbose", query_args.verbose,
                      "print per-leaf masses of large-variable sums");

  OddsArgs odds_args;
  CLI::App* odds_cmd =
      app.add_subcommand("odds", "Same-person odds for a record pair");
  odds_cmd->add_option("--config", odds_args.config_path, "linkage config file")
      ->required();
  odds_cmd->add_option("--x-fname", odds_args.x_fname, "first record's name")
      ->required();
  odds_cmd->add_option("--y-fname", odds_args.y_fname, "second record's name")
      ->required();
  odds_cmd->add_option("--x-phone", odds_args.x_phone, "first record's phone");
  odds_cmd->add_option("--y-phone", odds_args.y_phone, "second record's phone");
  odds_cmd->add_flag("--json", odds_args.json_output, "JSON output");
  odds_cmd->add_flag("--verbose", odds_args.verbose,
                     "print the leaf masses of the actual-name elimination");

  CheckArgs check_args;
  CLI::App* check_cmd = app.add_subcommand(
      "check", "Compare the engine against brute-force enumeration");
  check_cmd->add_option("--seeds", check_args.seeds, "number of random networks");
  check_cmd->add_option("--max-vars", check_args.max_vars,
                        "maximum variables per network");
  check_cmd->add_option("--tv-limit", check_args.tv_limit,
                        "total variation tolerance");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (query_cmd->parsed()) return run_query(query_args, out, err);
    if (odds_cmd->parsed()) return run_odds(odds_args, out, err);
    if (check_cmd->parsed()) return run_check(check_args, out);
    err << "usage error: no subcommand\n";
    return 1;
  } catch (const InferenceError& e) {
    err << "inference error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ldve
