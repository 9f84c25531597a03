#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pihier/hierarchy.hpp"
#include "pihier/normal.hpp"
#include "pihier/term.hpp"

namespace pihier {

struct Redex {
  enum class Kind { Comm, Tau };
  Kind kind = Kind::Tau;
  // active and branch indexes into the source normal form; a tau step only
  // uses the sender pair
  std::size_t sender = 0, receiver = 0;
  std::size_t sender_branch = 0, receiver_branch = 0;
  NameId chan = no_name, msg = no_name;  // comm only
  std::vector<NameId> activated;         // binders brought up by the step
};

std::string redex_summary(const Session& s, const Redex& r);

// All one-step reducts, already in normal form.  A replicated active
// contributes a fresh copy per step and persists; two copies of the same
// replication can communicate with each other.
std::vector<std::pair<Redex, NormalForm>> successors(Session& s,
                                                     const NormalForm& n);

enum class Verdict { No = 0, Yes = 1, Unknown = 2 };

// Does q occur inside p: an injection of q's actives into p's actives plus
// an injective renaming of q's binders into p's binders, with free names of
// q matched literally or captured by a binder of p, making every matched
// pair alpha-equal.  Unknown when the search exceeds its budget.
Verdict embeds(const NormalForm& q, const NormalForm& p,
               std::size_t budget = 1000000);

struct ExploreOptions {
  std::size_t max_states = 2000;
  std::size_t max_depth = 12;
  unsigned jobs = 1;
};

struct StateGraph {
  struct Edge {
    std::size_t from = 0, to = 0;
    std::string redex;
  };
  std::vector<std::string> keys;             // insertion order, keys[0] = root
  std::vector<NormalForm> states;            // parallel to keys
  std::vector<std::size_t> depth;            // BFS depth per state
  std::map<std::string, std::size_t> index;  // canonical key -> state number
  std::vector<Edge> edges;
  bool exhausted = false;  // whole reachable set fits within the bounds
};

StateGraph explore(Session& s, const TermPtr& t, const ExploreOptions& opts = {});

std::string graph_to_json(const Session& s, const StateGraph& g);
std::string graph_to_dot(const Session& s, const StateGraph& g);

enum class CoverOutcome { Covered = 0, NotCoverable = 1, Unknown = 3 };

struct CoverResult {
  CoverOutcome outcome = CoverOutcome::Unknown;
  std::optional<std::size_t> witness;  // covering state when found
  std::size_t states_explored = 0;
  bool embed_budget_hit = false;
};

// Bounded forward search for a reachable state embedding the query.
// Covered is definitive; NotCoverable only when exploration exhausted the
// reachable set; otherwise Unknown.
CoverResult cover(Session& s, const TermPtr& t, const TermPtr& query,
                  const ExploreOptions& opts = {});

struct InvarianceReport {
  bool ok = true;
  std::size_t states_checked = 0;
  bool exhausted = false;
  std::string failing_key;
  std::string what;
};

// Explores within bounds and checks that every reachable state still
// typechecks under env and stays shaped for the hierarchy.
InvarianceReport check_invariance(Session& s, const Hierarchy& h,
                                  const TypeEnv& env, const TermPtr& t,
                                  const ExploreOptions& opts = {});

}  // namespace pihier
