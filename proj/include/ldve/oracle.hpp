#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ldve/engine.hpp"

namespace ldve {

// Finite stand-ins for the large variables' domains. The universe must
// contain every string the evidence and the tables mention, and the table
// models must make each universe a probability space (entries plus
// pnew-weighted non-entries summing to 1).
struct ClosedUniverse {
  std::map<std::string, std::vector<std::string>> values;  // large var -> set

  const std::vector<std::string>& of(const std::string& var) const;
};

// Rewrites each table's unseen model so the universe closes it:
// n_unseen = |universe \ entries| and pnew = (1 - sum entries) / n_unseen.
// Engine and oracle then answer questions about the same finite model.
Network close_network_to_universe(Network net, const ClosedUniverse& universe);

// Exact posterior by enumerating every joint assignment (evidence variables
// fixed) and accumulating compensated sums. Refuses universes with more than
// 10^7 joint states.
Posterior oracle_posterior(const Network& net, const ClosedUniverse& universe,
                           const Assignment& evidence, const std::string& query);

// One enumeration pass computing the posterior of every unobserved variable.
std::map<std::string, Posterior> oracle_all_posteriors(
    const Network& net, const ClosedUniverse& universe,
    const Assignment& evidence);

// Joint probability of the evidence by full enumeration.
double oracle_evidence_likelihood(const Network& net,
                                  const ClosedUniverse& universe,
                                  const Assignment& evidence);

// Shape limits for generated networks.
struct NetworkShape {
  int max_variables = 6;
  int max_small_values = 5;
  std::uint64_t max_joint_states = 200000;
};

struct GeneratedNetwork {
  Network net;
  ClosedUniverse universe;
};

// Deterministic generation from a seed: a random DAG whose CPDs are decision
// trees (at least one with a predicate split), with table models already
// closed over the universe. The universe is all strings over a 2- or
// 3-letter alphabet up to a length cap, so single-edit neighbor sets stay
// inside it.
GeneratedNetwork random_network(std::uint64_t seed,
                                const NetworkShape& shape = {});

// Deterministic evidence picker for the check suite: observes a random
// subset (possibly empty) of the variables, never all of them.
Assignment random_evidence(std::uint64_t seed, const GeneratedNetwork& gen);

std::string serialize_for_hash(const Network& net);  // determinism checks

}  // namespace ldve
