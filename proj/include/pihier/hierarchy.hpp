#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pihier/term.hpp"

namespace pihier {

// Forest-shaped strict partial order on base types.  Roots are the least
// elements; every base has at most one immediate predecessor, so lt(a, b)
// holds exactly when a is a proper ancestor of b.
class Hierarchy {
 public:
  void add_base(BaseId b);
  void add_edge(BaseId parent, BaseId child);  // parent < child

  bool has(BaseId b) const { return up_.count(b) != 0; }
  // the immediate predecessor (the unique base just below b)
  std::optional<BaseId> parent(BaseId b) const;
  bool lt(BaseId a, BaseId b) const;
  bool leq(BaseId a, BaseId b) const { return a == b || lt(a, b); }

  // All bases of the set that have no other member strictly below them.
  std::vector<BaseId> minimal_of(const std::set<BaseId>& s) const;

  // The unique minimum of the set, if one member sits below all others.
  std::optional<BaseId> min_of(const std::set<BaseId>& s) const;

  std::vector<BaseId> bases() const;
  std::vector<BaseId> roots() const;

  static Hierarchy chain(const std::vector<BaseId>& low_to_high);

 private:
  std::map<BaseId, BaseId> up_;  // base -> immediate predecessor, no_base for roots
};

// Text format, one declaration per line:
//   a < b < c      edges a<b and b<c
//   d              a lone root
// '#' starts a comment.  Bases are interned in the session by display name.
Hierarchy parse_hierarchy(Session& s, const std::string& text);
std::string hierarchy_to_text(const Session& s, const Hierarchy& h);

// Typing environment for the free names of a term.
using TypeEnv = std::map<NameId, TypeExprPtr>;

// Text format: comma or newline separated "name : type" entries where a type
// is  base  or  base[type].
TypeEnv parse_env(Session& s, const std::string& text);
std::string env_to_text(const Session& s, const TypeEnv& env);

// The base of every free name's type must sit strictly below the base of
// every restriction annotation of the term.  Free names missing from the
// environment fail the check.
bool p_safe(const Session& s, const Hierarchy& h, const TypeEnv& env,
            const TermPtr& t, std::string* why = nullptr);

void collect_bases(const TypeExprPtr& t, std::set<BaseId>& out);
std::set<BaseId> annotation_bases(const TermPtr& t);

}  // namespace pihier
