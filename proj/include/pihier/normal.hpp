#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pihier/term.hpp"

namespace pihier {

// Normal form: a restriction spine over a parallel composition of sequential
// terms (choices, possibly replicated), each branch continuation again in
// normal form.  Dead binders are kept; prune() is the separate pass that
// drops them.
struct Active;

struct NormalForm {
  struct Binder {
    NameId name = no_name;
    TypeExprPtr annot;
  };
  std::vector<Binder> binders;
  std::vector<Active> actives;

  bool is_zero() const { return binders.empty() && actives.empty(); }
};

struct SeqBranch;

struct Active {
  bool repl = false;
  std::vector<SeqBranch> branches;
};

struct SeqBranch {
  Prefix prefix;
  NormalForm cont;
};

NormalForm nf(const TermPtr& t);
TermPtr to_term(const NormalForm& n);

NormalForm prune(const NormalForm& n);

bool nf_equal(const NormalForm& a, const NormalForm& b);

std::set<NameId> free_names(const Active& a);
std::set<NameId> free_names(const NormalForm& n);

// Substitution on a whole normal form (used for received messages).
NormalForm substitute_nf(const NormalForm& n, NameId from, NameId to);

Active clone_fresh_active(Session& s, const Active& a);

// linked: actives sharing a top-restricted name.  tied: its reflexive and
// transitive closure over all indexes.
std::vector<std::vector<bool>> linked_matrix(const NormalForm& n);
std::vector<std::vector<bool>> tied_matrix(const NormalForm& n);
// y is tied to active i when y occurs free in some A_j with j tied to i.
bool name_tied(const NormalForm& n, const std::vector<std::vector<bool>>& tied,
               NameId y, std::size_t i);
// Actives of cont a received name may migrate into: those tied to the input
// variable.
std::vector<std::size_t> migratable_indexes(NameId var, const NormalForm& cont);

// Canonical key: invariant under alpha-renaming, permutation of top-level
// binders and actives, and pruning.  Branch order inside a choice is
// significant (kept as written).
std::string canonical(const NormalForm& n);

// Serialization of a single active with every outer name blanked out; two
// actives that can match under some renaming of outer names share a shape.
std::string active_shape(const Active& a);

}  // namespace pihier
