#include <sstream>

#include "doctest.h"
#include "ldve/io.hpp"
#include "ldve/linkage.hpp"

using namespace ldve;

namespace {

const std::string kDataDir = LDVE_DATA_DIR;

std::string data_file(const std::string& name) {
  return read_file(kDataDir + "/" + name);
}

ParseOptions data_opts() {
  ParseOptions opts;
  opts.base_dir = kDataDir;
  return opts;
}

}  // namespace

TEST_CASE("the shipped network spec round-trips exactly") {
  Network net = parse_network(data_file("linkage_same.json"), data_opts());
  std::string once = serialize_network(net);
  Network reparsed = parse_network(once);
  std::string twice = serialize_network(reparsed);
  CHECK(once == twice);
  CHECK(net.variables.size() == reparsed.variables.size());
  CHECK(net.tables.at("male").entries == reparsed.tables.at("male").entries);
}

TEST_CASE("the spec file CPD matches the built-in network builder") {
  Network parsed = parse_network(data_file("linkage_same.json"), data_opts());
  LinkageConfig cfg =
      parse_linkage_config(data_file("linkage.json"), data_opts());
  Network built = build_same_network(cfg);

  auto parsed_index = parsed.variable_index();
  auto built_index = built.variable_index();
  EvalEnv penv = parsed.env(parsed_index);
  EvalEnv benv = built.env(built_index);

  std::vector<Assignment> spots = {
      {{"Fname_x", "DAVID"}, {"Afname", "DAVID"}, {"Sex", "male"}, {"EFx", "noerr"}},
      {{"Fname_x", "DAVE"}, {"Afname", "DAVO"}, {"Sex", "female"}, {"EFx", "sde"}},
      {{"Fname_x", "DAVID"}, {"Afname", "JOHN"}, {"Sex", "male"}, {"EFx", "ce"}},
      {{"Fname_x", "XQZT"}, {"Afname", "JOHN"}, {"Sex", "female"}, {"EFx", "ce"}},
      {{"Fname_x", "MARY"}, {"Afname", "DAVID"}, {"Sex", "male"}, {"EFx", "noerr"}},
  };
  for (const Assignment& a : spots) {
    CHECK(evaluate(parsed.cpds.at("Fname_x"), a, penv) ==
          doctest::Approx(evaluate(built.cpds.at("Fname_x"), a, benv))
              .epsilon(1e-12));
  }
}

TEST_CASE("dangling references are reported") {
  std::string spec = R"({
    "variables": [{"name": "Y", "kind": "large"}],
    "cpds": [{"child": "Y", "parents": [],
              "tree": {"pred": {"kind": "intable", "subject": {"var": "Y"},
                                "table": "ghost"},
                       "yes": {"leaf": 1}, "no": {"leaf": 0}}}]
  })";
  CHECK_THROWS_WITH_AS(parse_network(spec), doctest::Contains("ghost"),
                       std::invalid_argument);

  std::string missing_cpd = R"({
    "variables": [{"name": "X", "kind": "small", "values": ["a"]}],
    "cpds": []
  })";
  CHECK_THROWS_AS(parse_network(missing_cpd), std::invalid_argument);

  std::string syntax = "{ not json";
  CHECK_THROWS_AS(parse_network(syntax), std::invalid_argument);
}

TEST_CASE("non-normalized CPDs warn by default and fail under strict") {
  std::string spec = R"({
    "variables": [{"name": "X", "kind": "small", "values": ["a", "b"]}],
    "cpds": [{"child": "X", "parents": [],
              "tree": {"split": "X", "branches": [
                {"values": ["a"], "node": {"leaf": 0.5}},
                {"values": ["b"], "node": {"leaf": 0.75}}]}}]
  })";
  ParseOptions opts;
  std::vector<std::string> warnings;
  opts.warnings = &warnings;
  Network net = parse_network(spec, opts);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("sums to") != std::string::npos);

  opts.strict = true;
  CHECK_THROWS_AS(parse_network(spec, opts), std::invalid_argument);
}

TEST_CASE("posterior JSON is deterministic, sorted and round-trips") {
  Network net = parse_network(data_file("linkage_same.json"), data_opts());
  Assignment evidence{{"Fname_x", "DAVID"}, {"Fname_y", "DAVIG"}};
  Posterior p = posterior(net, evidence, "Afname");

  std::string a = posterior_to_json(p);
  std::string b = posterior_to_json(p);
  CHECK(a == b);
  CHECK(a.find("\"complement\"") < a.find("\"explicit\""));
  CHECK(a.find("\"explicit\"") < a.find("\"variable\""));

  Posterior q = posterior_from_json(a);
  CHECK(q.explicit_values == p.explicit_values);  // bit-faithful
  REQUIRE(q.complement.has_value());
  CHECK(q.complement->per_value == p.complement->per_value);
  CHECK(q.complement->total_mass == p.complement->total_mass);
  CHECK(q.complement->count.count == p.complement->count.count);
  CHECK(posterior_to_json(q) == a);
}

TEST_CASE("cli query runs end to end") {
  std::ostringstream out, err;
  int rc = cli_main({"query", "--net", kDataDir + "/linkage_same.json",
                     "--evidence", "Fname_x=DAVID", "--evidence",
                     "Fname_y=DAVIG", "--query", "Sex", "--json"},
                    out, err);
  CHECK(rc == 0);
  CHECK(out.str().find("\"male\":") != std::string::npos);
  Posterior p = posterior_from_json(out.str());
  CHECK(p.explicit_values.at("male") > 0.9);
}

TEST_CASE("cli rejects usage errors with exit 1") {
  std::ostringstream out, err;
  CHECK(cli_main({"query", "--query", "Sex"}, out, err) == 1);
  CHECK(cli_main({"bogus"}, out, err) == 1);
  CHECK(cli_main({}, out, err) == 1);
  CHECK(cli_main({"query", "--net", "/nonexistent.json", "--query", "X"}, out,
                 err) == 1);
}

TEST_CASE("cli accepts an explicit elimination order and validates it") {
  std::ostringstream out, err;
  int rc = cli_main({"query", "--net", kDataDir + "/linkage_same.json",
                     "--evidence", "Fname_x=DAVID", "--evidence",
                     "Fname_y=DAVIG", "--query", "Sex", "--order",
                     "SloppyX,SloppyY,EFx,EFy,Afname", "--json"},
                    out, err);
  CHECK(rc == 0);
  Posterior p = posterior_from_json(out.str());
  CHECK(p.explicit_values.at("male") > 0.9);

  std::ostringstream out2, err2;
  CHECK(cli_main({"query", "--net", kDataDir + "/linkage_same.json",
                  "--evidence", "Fname_x=DAVID", "--query", "Sex", "--order",
                  "SloppyX"},
                 out2, err2) == 1);
}

TEST_CASE("cli help exits zero") {
  std::ostringstream out, err;
  CHECK(cli_main({"--help"}, out, err) == 0);
  CHECK(out.str().find("query") != std::string::npos);
}

TEST_CASE("cli reports inference errors with exit 2") {
  std::ostringstream out, err;
  int rc = cli_main({"query", "--net", kDataDir + "/linkage_same.json",
                     "--evidence", "Fname_x=DAVID", "--evidence",
                     "Fname_y=MARY", "--evidence", "EFx=noerr", "--evidence",
                     "EFy=noerr", "--query", "Sex"},
                    out, err);
  CHECK(rc == 2);
  CHECK(err.str().find("evidence has probability zero") != std::string::npos);
}

TEST_CASE("cli odds prints the walkthrough masses under --verbose") {
  std::ostringstream out, err;
  int rc = cli_main({"odds", "--config", kDataDir + "/linkage.json",
                     "--x-fname", "DAVID", "--y-fname", "DAVIG", "--verbose"},
                    out, err);
  CHECK(rc == 0);
  std::string text = out.str();
  CHECK(text.find("odds(DAVID, DAVIG)") != std::string::npos);
  // The intersection-with-table and outside-table sde masses.
  CHECK(text.find("singlet(Afname, \"DAVID\") & singlet(Afname, \"DAVIG\") & "
                  "intable(Afname, male)") != std::string::npos);
  CHECK(text.find("(23 values)") != std::string::npos);
}

TEST_CASE("cli check agrees with the oracle on a few seeds") {
  std::ostringstream out, err;
  int rc = cli_main({"check", "--seeds", "5"}, out, err);
  CHECK(rc == 0);
  CHECK(out.str().find("5/5 seeds") != std::string::npos);
}

TEST_CASE("cli odds json output carries 17 significant digits") {
  std::ostringstream out, err;
  int rc = cli_main({"odds", "--config", kDataDir + "/linkage.json",
                     "--x-fname", "DAVID", "--y-fname", "DAVID", "--json"},
                    out, err);
  CHECK(rc == 0);
  // Bit-faithful: parsing the numbers back and reformatting is stable.
  std::string text = out.str();
  CHECK(text.find("\"odds\":") != std::string::npos);
  CHECK(text.find("\"same_likelihood\":") != std::string::npos);
}
