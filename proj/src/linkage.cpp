#include "ldve/linkage.hpp"

#include <algorithm>
#include <cmath>

namespace ldve {

namespace {

void check_distribution(const NamedDistribution& d, const std::string& what) {
  if (d.empty()) throw std::invalid_argument(what + " is empty");
  double sum = 0.0;
  for (const auto& [key, p] : d) {
    if (p < 0.0 || p > 1.0) {
      throw std::invalid_argument(what + "[" + key + "] outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(what + " sums to " + std::to_string(sum));
  }
}

const std::vector<std::string> kErrorValues{"noerr", "sde", "ce"};
const std::vector<std::string> kSexValues{"male", "female"};
const std::vector<std::string> kSloppyValues{"yes", "no"};

NodePtr distribution_split(const std::string& var,
                           const std::vector<std::string>& values,
                           const NamedDistribution& dist) {
  std::vector<SmallBranch> branches;
  for (const std::string& v : values) {
    auto it = dist.find(v);
    if (it == dist.end()) {
      throw std::invalid_argument("distribution missing value " + v);
    }
    branches.push_back({{v}, leaf(it->second)});
  }
  return small_split(var, std::move(branches));
}

}  // namespace

void validate_config(const LinkageConfig& cfg) {
  if (!cfg.tables.count(cfg.male_table)) {
    throw std::invalid_argument("missing male table: " + cfg.male_table);
  }
  if (!cfg.tables.count(cfg.female_table)) {
    throw std::invalid_argument("missing female table: " + cfg.female_table);
  }
  check_distribution(cfg.sex_prior, "sex_prior");
  check_distribution(cfg.sloppy_prior, "sloppy_prior");
  for (const std::string& s : kSloppyValues) {
    auto it = cfg.error_prior.find(s);
    if (it == cfg.error_prior.end()) {
      throw std::invalid_argument("error_prior missing sloppy=" + s);
    }
    check_distribution(it->second, "error_prior[" + s + "]");
    for (const std::string& e : kErrorValues) {
      if (!it->second.count(e)) {
        throw std::invalid_argument("error_prior[" + s + "] missing " + e);
      }
    }
  }
  if (!(cfg.prior_same > 0.0) || !(cfg.prior_same < 1.0)) {
    throw std::invalid_argument("prior_same must lie in (0,1)");
  }
  if (!(cfg.phone_space >= 1.0)) {
    throw std::invalid_argument("phone_space must be >= 1");
  }
}

Factor fname_cpd(const std::string& observed, const std::string& actual,
                 const std::string& sex, const std::string& error,
                 const LinkageConfig& cfg) {
  // Three cases on the error variable. No error forces the observed name to
  // equal the actual one; a single-edit error spreads uniformly over the
  // observed name's neighbors; a copy error draws afresh from the
  // sex-specific name prior.
  NodePtr noerr_branch =
      pred_split(equal_atom(var_term(actual), var_term(observed)), leaf(1.0),
                 leaf(0.0));
  NodePtr sde_branch =
      pred_split(single_edit_atom(var_term(actual), var_term(observed)),
                 leaf(label_prsing(var_term(observed))), leaf(0.0));
  auto table_branch = [&](const std::string& table_id) {
    return pred_split(in_table_atom(var_term(observed), table_id),
                      leaf(label_table_pdf(observed, table_id)),
                      leaf(label_pnew(table_id)));
  };
  NodePtr ce_branch = small_split(
      sex, {{{"male"}, table_branch(cfg.male_table)},
            {{"female"}, table_branch(cfg.female_table)}});
  NodePtr root = small_split(error, {{{"noerr"}, noerr_branch},
                                     {{"sde"}, sde_branch},
                                     {{"ce"}, ce_branch}});
  return make_factor({observed, actual, sex, error}, std::move(root));
}

namespace {

Factor afname_prior(const std::string& actual, const std::string& sex,
                    const LinkageConfig& cfg) {
  auto table_branch = [&](const std::string& table_id) {
    return pred_split(in_table_atom(var_term(actual), table_id),
                      leaf(label_table_pdf(actual, table_id)),
                      leaf(label_pnew(table_id)));
  };
  NodePtr root = small_split(sex, {{{"male"}, table_branch(cfg.male_table)},
                                   {{"female"}, table_branch(cfg.female_table)}});
  return make_factor({actual, sex}, std::move(root));
}

Factor error_cpd(const std::string& error, const std::string& sloppy,
                 const LinkageConfig& cfg) {
  std::vector<SmallBranch> branches;
  for (const std::string& s : kSloppyValues) {
    branches.push_back(
        {{s}, distribution_split(error, kErrorValues, cfg.error_prior.at(s))});
  }
  return make_factor({error, sloppy}, small_split(sloppy, std::move(branches)));
}

struct RecordVars {
  std::string observed;
  std::string sloppy;
  std::string error;
};

// One generative chain: Sex -> Afname -> Fname, with the error machinery.
// Variable names are supplied so the two-person model can rename its copies.
void add_chain(Network& net, const LinkageConfig& cfg, const std::string& sex,
               const std::string& actual,
               const std::vector<RecordVars>& records) {
  net.variables.push_back({sex, small_domain(kSexValues)});
  net.variables.push_back({actual, large_domain(cfg.alphabet)});
  net.cpds.emplace(sex, make_factor({sex}, distribution_split(
                                               sex, kSexValues, cfg.sex_prior)));
  net.cpds.emplace(actual, afname_prior(actual, sex, cfg));
  for (const auto& [observed, sloppy, error] : records) {
    net.variables.push_back({sloppy, small_domain(kSloppyValues)});
    net.variables.push_back({error, small_domain(kErrorValues)});
    net.variables.push_back({observed, large_domain(cfg.alphabet)});
    net.cpds.emplace(
        sloppy, make_factor({sloppy}, distribution_split(sloppy, kSloppyValues,
                                                         cfg.sloppy_prior)));
    net.cpds.emplace(error, error_cpd(error, sloppy, cfg));
    net.cpds.emplace(observed, fname_cpd(observed, actual, sex, error, cfg));
  }
}

}  // namespace

Network build_same_network(const LinkageConfig& cfg) {
  validate_config(cfg);
  Network net;
  net.alphabet = cfg.alphabet;
  net.tables = cfg.tables;
  add_chain(net, cfg, "Sex", "Afname",
            {{"Fname_x", "SloppyX", "EFx"}, {"Fname_y", "SloppyY", "EFy"}});
  validate_network(net);
  return net;
}

Network build_diff_network(const LinkageConfig& cfg) {
  validate_config(cfg);
  Network net;
  net.alphabet = cfg.alphabet;
  net.tables = cfg.tables;
  add_chain(net, cfg, "Sex_x", "Afname_x", {{"Fname_x", "SloppyX", "EFx"}});
  add_chain(net, cfg, "Sex_y", "Afname_y", {{"Fname_y", "SloppyY", "EFy"}});
  validate_network(net);
  return net;
}

namespace {

bool legal_phone(const std::string& phone) {
  if (phone.empty()) return false;
  return std::all_of(phone.begin(), phone.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

}  // namespace

double odds(const RecordDesc& x, const RecordDesc& y, const LinkageConfig& cfg,
            OddsBreakdown* breakdown) {
  validate_config(cfg);
  if (x.fname.empty() || y.fname.empty()) {
    throw std::invalid_argument("record without a first name");
  }

  Assignment evidence{{"Fname_x", normalize_name(x.fname)},
                      {"Fname_y", normalize_name(y.fname)}};

  Network same = build_same_network(cfg);
  QueryOptions same_opts;
  std::vector<SumOutTrace> traces;
  same_opts.traces = &traces;
  double same_likelihood = evidence_likelihood(same, evidence, same_opts);

  Network diff = build_diff_network(cfg);
  double diff_likelihood = evidence_likelihood(diff, evidence);

  // Phones pass through the uniform stub: each observed legal phone is an
  // independent 1/P draw under both hypotheses, so the factors cancel; an
  // illegal phone has probability zero under both.
  double phone_factor = 1.0;
  for (const std::optional<std::string>& phone : {x.phone, y.phone}) {
    if (!phone) continue;
    if (!legal_phone(*phone)) {
      throw InferenceError("records impossible under difference model: "
                           "illegal phone number " + *phone);
    }
  }

  if (!(diff_likelihood > 0.0)) {
    throw InferenceError("records impossible under difference model");
  }
  double prior_ratio = cfg.prior_same / (1.0 - cfg.prior_same);
  double result = same_likelihood / diff_likelihood * prior_ratio * phone_factor;
  if (breakdown) {
    breakdown->same_likelihood = same_likelihood;
    breakdown->diff_likelihood = diff_likelihood;
    breakdown->prior_ratio = prior_ratio;
    breakdown->phone_factor = phone_factor;
    breakdown->odds = result;
    breakdown->same_traces = std::move(traces);
  }
  return result;
}

}  // namespace ldve
