#include <cmath>

#include "doctest.h"
#include "ldve/linkage.hpp"
#include "ldve/oracle.hpp"

using namespace ldve;

namespace {

LinkageConfig demo_config() {
  LinkageConfig cfg;
  cfg.alphabet = latin_alphabet();
  cfg.tables.emplace(
      "male", load_name_table("male",
                              "MICHAEL 25000\nJOHN 20000\nROBERT 20000\n"
                              "JAMES 15000\nWILLIAM 6137\nDAVID 2363\nDAVIS 1500\n",
                              1e-4, 0.9));
  cfg.tables.emplace(
      "female",
      load_name_table("female",
                      "MARY 30\nPATRICIA 20\nLINDA 15\nBARBARA 15\nELIZABETH 10\n",
                      1e-4, 0.9));
  cfg.male_table = "male";
  cfg.female_table = "female";
  cfg.sex_prior = {{"male", 0.5}, {"female", 0.5}};
  cfg.sloppy_prior = {{"yes", 0.1}, {"no", 0.9}};
  cfg.error_prior = {
      {"yes", {{"noerr", 0.7}, {"sde", 0.2}, {"ce", 0.1}}},
      {"no", {{"noerr", 0.97}, {"sde", 0.02}, {"ce", 0.01}}}};
  cfg.prior_same = 0.5;
  return cfg;
}

double cpd_value(const Network& net, const std::string& child,
                 const Assignment& a) {
  auto index = net.variable_index();
  EvalEnv env = net.env(index);
  return evaluate(net.cpds.at(child), a, env);
}

}  // namespace

TEST_CASE("the same-person network reproduces the three CPD cases") {
  Network net = build_same_network(demo_config());

  CHECK(cpd_value(net, "Fname_x", {{"Fname_x", "DAVE"},
                                   {"Afname", "DAVO"},
                                   {"Sex", "male"},
                                   {"EFx", "sde"}}) ==
        doctest::Approx(1.0 / 100).epsilon(1e-12));

  for (const std::string& sex : {"male", "female"}) {
    CHECK(cpd_value(net, "Fname_x", {{"Fname_x", "LINDA"},
                                     {"Afname", "LINDA"},
                                     {"Sex", sex},
                                     {"EFx", "noerr"}}) == 1.0);
  }

  CHECK(cpd_value(net, "Fname_x", {{"Fname_x", "DAVID"},
                                   {"Afname", "MARY"},
                                   {"Sex", "male"},
                                   {"EFx", "ce"}}) ==
        doctest::Approx(0.02363).epsilon(1e-12));

  // Copy errors for names outside the file fall back to pnew.
  CHECK(cpd_value(net, "Fname_x", {{"Fname_x", "XQZT"},
                                   {"Afname", "MARY"},
                                   {"Sex", "male"},
                                   {"EFx", "ce"}}) ==
        doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("missing tables are rejected") {
  LinkageConfig cfg = demo_config();
  cfg.male_table = "nonexistent";
  CHECK_THROWS_AS(build_same_network(cfg), std::invalid_argument);
  LinkageConfig bad = demo_config();
  bad.sex_prior = {{"male", 0.7}, {"female", 0.7}};
  CHECK_THROWS_AS(build_same_network(bad), std::invalid_argument);
}

TEST_CASE("the difference model factorizes into single-record likelihoods") {
  LinkageConfig cfg = demo_config();
  Network diff = build_diff_network(cfg);

  Assignment evidence{{"Fname_x", "DAVID"}, {"Fname_y", "DAVIG"}};
  double joint = evidence_likelihood(diff, evidence);
  double px = evidence_likelihood(diff, {{"Fname_x", "DAVID"}});
  double py = evidence_likelihood(diff, {{"Fname_y", "DAVIG"}});
  CHECK(joint == doctest::Approx(px * py).epsilon(1e-12));

  // Swapping the records leaves the likelihood unchanged.
  double swapped = evidence_likelihood(
      diff, {{"Fname_x", "DAVIG"}, {"Fname_y", "DAVID"}});
  CHECK(joint == doctest::Approx(swapped).epsilon(1e-12));

  // Identical records still get nonzero likelihood under the diff model.
  CHECK(evidence_likelihood(
            diff, {{"Fname_x", "DAVID"}, {"Fname_y", "DAVID"}}) > 0.0);
}

TEST_CASE("odds ranks exact, near and unrelated names sensibly") {
  LinkageConfig cfg = demo_config();
  double same = odds({"DAVID", {}}, {"DAVID", {}}, cfg);
  double near = odds({"DAVID", {}}, {"DAVIG", {}}, cfg);
  double far = odds({"DAVID", {}}, {"XQZT", {}}, cfg);
  CHECK(same > near);
  CHECK(near > far);
  CHECK(far > 0.0);
}

TEST_CASE("odds is symmetric under record swap") {
  LinkageConfig cfg = demo_config();
  double xy = odds({"DAVID", {}}, {"DAVIG", {}}, cfg);
  double yx = odds({"DAVIG", {}}, {"DAVID", {}}, cfg);
  CHECK(std::abs(xy - yx) / xy <= 1e-9);
}

TEST_CASE("a balanced prior contributes an odds factor of one") {
  LinkageConfig cfg = demo_config();
  cfg.prior_same = 0.5;
  OddsBreakdown breakdown;
  odds({"DAVID", {}}, {"DAVIS", {}}, cfg, &breakdown);
  CHECK(breakdown.prior_ratio == doctest::Approx(1.0));
  CHECK(breakdown.odds ==
        doctest::Approx(breakdown.same_likelihood / breakdown.diff_likelihood));
}

TEST_CASE("phones pass through the uniform stub") {
  LinkageConfig cfg = demo_config();
  double without = odds({"DAVID", {}}, {"DAVIG", {}}, cfg);
  double with = odds({"DAVID", std::string("5551234567")},
                     {"DAVIG", std::string("5559876543")}, cfg);
  CHECK(without == doctest::Approx(with));
  CHECK_THROWS_AS(
      odds({"DAVID", std::string("555-BAD")}, {"DAVIG", {}}, cfg),
      InferenceError);
}

TEST_CASE("the single-edit pair carries the walkthrough sde mass") {
  // The sde/sde path of the same-likelihood must contain exactly
  // prsing(w)^2 * (table mass of the intersection) + 23 * prsing^2 * pnew.
  LinkageConfig cfg = demo_config();
  OddsBreakdown breakdown;
  odds({"DAVID", {}}, {"DAVIG", {}}, cfg, &breakdown);
  REQUIRE(breakdown.same_traces.size() == 1);

  double p_davis = cfg.tables.at("male").entries.at("DAVIS");
  double pnew = cfg.tables.at("male").pnew;
  double prsing2 = (1.0 / 125) * (1.0 / 125);
  bool saw_table_side = false, saw_unseen_side = false;
  for (const LeafMassRecord& r : breakdown.same_traces[0].leaves) {
    int singlets = 0;
    bool intable_pos = false, intable_neg = false, male = false;
    for (const Literal& lit : r.context.literals) {
      if (lit.atom.kind == AtomKind::SingleEdit && lit.positive) ++singlets;
      if (lit.atom.kind == AtomKind::InTable) {
        male = lit.atom.table_id == "male";
        (lit.positive ? intable_pos : intable_neg) = true;
      }
    }
    if (singlets != 2 || !male) continue;
    if (intable_pos) {
      CHECK(r.mass == doctest::Approx(prsing2 * p_davis).epsilon(1e-12));
      saw_table_side = true;
    } else if (intable_neg) {
      CHECK(r.mass == doctest::Approx(23 * prsing2 * pnew).epsilon(1e-12));
      saw_unseen_side = true;
    }
  }
  CHECK(saw_table_side);
  CHECK(saw_unseen_side);
}

TEST_CASE("the product of the three actual-name factors has the joint scope") {
  LinkageConfig cfg = demo_config();
  Network net = build_same_network(cfg);
  auto index = net.variable_index();
  EvalEnv env = net.env(index);

  Factor f1 = condition(net.cpds.at("Fname_x"), "Fname_x", "DAVID", env);
  Factor f2 = condition(net.cpds.at("Fname_y"), "Fname_y", "DAVIG", env);
  const Factor& f3 = net.cpds.at("Afname");
  Factor product = multiply({f1, f2, f3}, env);
  CHECK(product.scope ==
        std::vector<std::string>{"Afname", "EFx", "EFy", "Sex"});

  // Summing the actual name out leaves the three small variables.
  Factor summed = sum_out_large(product, "Afname", env);
  CHECK(summed.scope == std::vector<std::string>{"EFx", "EFy", "Sex"});
}

TEST_CASE("swapping x and y record roles leaves the same-model symmetric") {
  // Structural symmetry: the same-person network treats the two records
  // identically up to renaming.
  LinkageConfig cfg = demo_config();
  Network net = build_same_network(cfg);
  double a = evidence_likelihood(net, {{"Fname_x", "JOHN"}, {"Fname_y", "JOHM"}});
  double b = evidence_likelihood(net, {{"Fname_x", "JOHM"}, {"Fname_y", "JOHN"}});
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}
