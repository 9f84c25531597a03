#pragma once

#include <string>
#include <vector>

#include "pihier/hierarchy.hpp"
#include "pihier/normal.hpp"

namespace pihier {

struct TypeViolation {
  std::string rule;           // par, out, in, env
  std::string where;          // path through the normal form
  std::string constraint;     // rendered description of the failed premise
  std::vector<BaseId> bases;  // offending base types, when known
};

struct TypingReport {
  bool ok = true;
  std::vector<TypeViolation> violations;
};

// Syntax-directed check of an annotated normal form against the hierarchy.
// Violations accumulate; missing annotations or environment entries are
// reported as violations rather than thrown.
TypingReport typecheck(const Session& s, const Hierarchy& h, const TypeEnv& env,
                       const NormalForm& n);

// The same check on an arbitrary term, via its normal form.
TypingReport typecheck_term(const Session& s, const Hierarchy& h,
                            const TypeEnv& env, const TermPtr& t);

std::string report_to_text(const Session& s, const TypingReport& r);
std::string report_to_json(const Session& s, const TypingReport& r);

}  // namespace pihier
