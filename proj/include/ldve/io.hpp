#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ldve/engine.hpp"
#include "ldve/linkage.hpp"

namespace ldve {

struct ParseOptions {
  // Table paths are resolved against this directory.
  std::string base_dir;
  // Non-normalized CPDs are an error instead of a warning.
  bool strict = false;
  std::vector<std::string>* warnings = nullptr;
};

// Parses the JSON network description: variables (small with values, large
// over the alphabet), tables (loaded from files or inline text, or given as
// explicit entries), and one CPD tree per variable. References are checked
// and CPD normalization is probed where the parent context is enumerable.
Network parse_network(const std::string& text, const ParseOptions& opts = {});

// Deterministic JSON form that parse_network accepts back; tables are
// emitted with explicit entries so the text is self-contained.
std::string serialize_network(const Network& net);

LinkageConfig parse_linkage_config(const std::string& text,
                                   const ParseOptions& opts = {});

// Posterior as JSON with 17-significant-digit probabilities (bit-faithful
// double round-trip) and sorted keys.
std::string posterior_to_json(const Posterior& p);
Posterior posterior_from_json(const std::string& text);

std::string read_file(const std::string& path);

// The command-line entry point: `query`, `odds` and `check` subcommands.
// Returns 0 on success, 1 on usage or input errors, 2 on inference errors.
int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace ldve
