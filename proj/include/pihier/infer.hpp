#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pihier/hierarchy.hpp"
#include "pihier/term.hpp"

namespace pihier {

// base(type of lhs) must sit strictly below base(type of rhs)
struct OrderAtom {
  NameId lhs = no_name;
  NameId rhs = no_name;
  std::string origin;  // which rule produced it
};

// disjunction of atoms, tried left to right; a single atom is a hard fact
struct OrderClause {
  std::vector<OrderAtom> atoms;
};

// type of chan = b[type of payload] for a fresh base variable b
struct FlowEquation {
  NameId chan = no_name;
  NameId payload = no_name;
  std::string origin;
};

struct ConstraintSet {
  std::vector<FlowEquation> flows;
  std::vector<OrderClause> clauses;
};

// One symbolic pass mirroring the checker: every name gets a type variable,
// each output or input adds a flow equation, the tied-restriction and
// received-name conditions add order atoms over the variables' bases.
ConstraintSet generate_constraints(const Session& s, const TermPtr& t);

// Solved form of the flow equations: names are grouped into classes, each
// class optionally carries a payload class, its base variable is the class
// id itself.  Not simply typable when a name's type would contain itself.
struct UnifyResult {
  bool ok = true;
  std::map<NameId, std::uint32_t> type_class;
  std::vector<std::optional<std::uint32_t>> payload;  // per class
  std::vector<NameId> owner;  // smallest name of each class, for display
  std::vector<NameId> cycle;  // owners along the payload cycle on failure
};

UnifyResult unify_flows(const ConstraintSet& c,
                        const std::vector<NameId>& universe);

struct ResolvedAtom {
  std::uint32_t lhs = 0, rhs = 0;
  std::string origin;
};

struct OrderProblem {
  std::size_t base_count = 0;
  std::vector<std::string> base_names;             // for diagnostics
  std::vector<std::vector<ResolvedAtom>> clauses;  // singletons are facts
};

struct OrderSolution {
  bool ok = false;
  bool inconclusive = false;
  std::vector<std::uint32_t> chain;  // lowest to highest
  std::vector<ResolvedAtom> core;    // contradiction when unsat
  std::size_t backtracks = 0;
};

// Backtracking search over the disjuncts: every choice set must keep the
// atom graph acyclic, the resulting topological chain must satisfy accept.
// Base variables touched by no atom go to the end of the chain in id order.
OrderSolution solve_order(
    const OrderProblem& p, std::size_t max_backtracks,
    const std::function<bool(const std::vector<std::uint32_t>&)>& accept = {});

struct InferOptions {
  std::size_t max_backtracks = 100000;
};

struct InferenceResult {
  enum class Status { Ok = 0, Unsat = 1, Inconclusive = 2 };
  Status status = Status::Unsat;
  Hierarchy hierarchy;  // a chain when ok
  std::map<NameId, TypeExprPtr> annotation;  // every restriction name
  TypeEnv env;                               // every free name
  ConstraintSet constraints;
  std::vector<std::string> core;  // why no hierarchy exists
  std::size_t backtracks = 0;
};

// Finds a base hierarchy, annotations and an environment under which the
// term typechecks, stays shaped and the environment is safe; existing
// annotations are ignored and re-derived.  Candidate chains failing any of
// the three final checks are backtracked over, so an ok result has passed
// all of them.
InferenceResult infer(Session& s, const TermPtr& t,
                      const InferOptions& opts = {});

std::string inference_to_text(const Session& s, const InferenceResult& r);
std::string inference_to_json(const Session& s, const InferenceResult& r);

}  // namespace pihier
