#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pihier/hierarchy.hpp"
#include "pihier/term.hpp"

namespace pihier {

// A reset net: transitions update the marking by their vector, then empty
// the places in their reset set.  Places are 1-based.
struct ResetNet {
  std::size_t places = 0;
  struct Transition {
    std::vector<int> update;        // one entry per place, in {-1, 0, +1}
    std::set<std::size_t> reset;
  };
  std::vector<Transition> transitions;
  std::vector<std::size_t> initial;  // marking, one entry per place
};

ResetNet reset_net_from_json(const std::string& text);
std::string reset_net_to_json(const ResetNet& n);
ResetNet random_reset_net(std::mt19937& rng, std::size_t max_places = 3,
                          std::size_t max_transitions = 3);

// A counter machine: instruction j is inc(counter, jump) or
// dec(counter, jump_nonzero, jump_zero).  Counters and targets are 1-based.
struct MinskyMachine {
  std::size_t counters = 0;
  struct Instr {
    bool inc = true;
    std::size_t counter = 1;
    std::size_t jump1 = 1;  // target; for dec, taken when nonzero
    std::size_t jump2 = 1;  // for dec, taken when zero
  };
  std::vector<Instr> instructions;
  std::size_t entry = 1;
  std::vector<std::size_t> registers;  // initial values, one per counter
};

MinskyMachine minsky_from_json(const std::string& text);
std::string minsky_to_json(const MinskyMachine& m);

// A generated system: the source text uses the nullary send/receive
// shorthand, term is the parsed and fully annotated version, and the
// hierarchy and environment make it typecheck.
struct Encoded {
  std::string source;
  TermPtr term;
  Hierarchy hierarchy;
  TypeEnv env;
  std::map<NameId, TypeExprPtr> annotation;
};

Encoded encode_reset_net(Session& s, const ResetNet& n);
Encoded encode_minsky(Session& s, const MinskyMachine& m);

// Built-in example systems with their expected analysis outcomes.
struct CorpusEntry {
  std::string name;
  std::string source;
  std::string hierarchy;  // suggested, empty when none applies
  std::string env;        // suggested, same
  bool typably_hierarchical = false;
  std::string note;
};

const std::vector<CorpusEntry>& corpus();

}  // namespace pihier
