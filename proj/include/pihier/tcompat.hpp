#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pihier/forest.hpp"
#include "pihier/hierarchy.hpp"
#include "pihier/normal.hpp"

namespace pihier {

// First partition check that broke during the phi construction.
struct PhiFailure {
  int step = 0;  // preorder index of the recursion step
  std::string what;
  std::vector<NameId> names;
  std::vector<std::size_t> actives;  // indexes within that step's term
};

struct PhiOutcome {
  LabelledForest forest;
  bool ok = true;
  std::optional<PhiFailure> failure;
};

// Builds the canonical candidate forest for the term's congruence class by
// repeatedly splitting off the binders with minimal base types.  ok holds
// iff the tied-active sets of the minimal binders stay disjoint at every
// step and nested binders carry strictly increasing bases; then the forest
// is a witness, so ok decides compatibility.
// Throws std::runtime_error on an unannotated binder.
PhiOutcome phi(const Hierarchy& h, const NormalForm& n);

// phi(nf(t)).ok: some spelling of t nests restrictions along the hierarchy.
bool is_tcompat(const Hierarchy& h, const TermPtr& t);
// is_tcompat on every subterm, including under prefixes.
bool is_tshaped(const Hierarchy& h, const TermPtr& t);

// Name nodes carry strictly increasing base types along every path.  Name
// nodes without an annotation count as incomparable to everything.
bool tcompat_forest(const Hierarchy& h, const LabelledForest& f);

// Grafts r onto f.  path is a root-to-node chain of indexes into f; each
// root of r hangs under the deepest path node that can take it: a name root
// needs a node with strictly smaller base, a leaf root needs a node whose
// name occurs free in its label.  Roots with no such node stay roots.
LabelledForest ins(const Hierarchy& h, const LabelledForest& f,
                   const std::vector<int>& path, const LabelledForest& r);

std::string phi_failure_text(const Session& s, const PhiFailure& f);
std::string phi_failure_json(const Session& s, const PhiFailure& f);

}  // namespace pihier
