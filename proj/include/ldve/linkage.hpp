#pragma once

#include <optional>
#include <string>

#include "ldve/engine.hpp"

namespace ldve {

// One record's observed attributes. Phone numbers ride along for the
// uniform-legality stub; only first names carry a real model.
struct RecordDesc {
  std::string fname;
  std::optional<std::string> phone;
};

// Distribution over a small value set, summing to 1.
using NamedDistribution = std::map<std::string, double>;

struct LinkageConfig {
  TableRegistry tables;
  std::string male_table;
  std::string female_table;
  double pnew = 1e-4;
  NamedDistribution sex_prior;                         // male / female
  NamedDistribution sloppy_prior;                      // yes / no
  std::map<std::string, NamedDistribution> error_prior;  // sloppy -> {noerr,sde,ce}
  double prior_same = 0.5;
  double phone_space = 1e7;  // legal phone numbers, for the stub
  Alphabet alphabet;
};

void validate_config(const LinkageConfig& cfg);

// Shared-person model: Sex -> Afname; Afname, Sex, EFx -> Fname_x (and the
// y-side copy); SloppyX -> EFx. The name CPDs are the three-case trees:
// no-error identity, single-edit error, copy error via the sex-specific
// table.
Network build_same_network(const LinkageConfig& cfg);

// Different-person model: two independent copies of the generative chain,
// so the pair likelihood factorizes into single-record likelihoods.
Network build_diff_network(const LinkageConfig& cfg);

// The per-variable CPD of an observed name given actual name, sex and error
// type; exposed for building fragments and tests.
Factor fname_cpd(const std::string& observed, const std::string& actual,
                 const std::string& sex, const std::string& error,
                 const LinkageConfig& cfg);

struct OddsBreakdown {
  double same_likelihood = 0.0;
  double diff_likelihood = 0.0;
  double prior_ratio = 1.0;
  double phone_factor = 1.0;
  double odds = 0.0;
  std::vector<SumOutTrace> same_traces;  // leaf masses from eliminating Afname
};

// P(desc | same) / P(desc | diff) * P(same) / P(diff). Phone attributes pass
// through the uniform stub: a legal phone contributes the same 1/phone_space
// per record to both hypotheses, an illegal one is an error.
double odds(const RecordDesc& x, const RecordDesc& y, const LinkageConfig& cfg,
            OddsBreakdown* breakdown = nullptr);

}  // namespace ldve
