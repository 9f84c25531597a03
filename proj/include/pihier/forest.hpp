#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pihier/normal.hpp"

namespace pihier {

// Labelled forest over a term: internal nodes are restriction names, leaves
// are sequential subterms.
struct ForestNode {
  int parent = -1;        // index into nodes, -1 for roots; always < own index
  NameId name = no_name;  // name nodes
  TypeExprPtr annot;      // annotation when known
  TermPtr seq;            // leaf label, null on name nodes
  bool is_name() const { return seq == nullptr; }
};

struct LabelledForest {
  std::vector<ForestNode> nodes;
  bool empty() const { return nodes.empty(); }
};

// Syntactic forest of the term as written: restriction under restriction
// chains, parallel composition branches, sequential subterms close off leaves.
LabelledForest forest_of(const TermPtr& t);

// Name nodes on the longest root path.
int restriction_height(const LabelledForest& f);
// Maximal restriction nesting of the term as written; sequential subterms
// count as zero.  Equals restriction_height(forest_of(t)).
int nest_nu(const TermPtr& t);

// Rebuilds a congruent term: one restriction per name node, parallel
// composition per branching.
TermPtr term_of_forest(const LabelledForest& f);

// Structural key, invariant under sibling order and node numbering.  Name
// nodes keyed by id, leaves by a rigid serialization of their label.
std::string forest_key(const LabelledForest& f);

std::string forest_to_text(const Session& s, const LabelledForest& f);
std::string forest_to_dot(const Session& s, const LabelledForest& f);

// Every forest over the normal form's top binders and actives in which
// sequential labels sit only on childless nodes, each binder labels exactly
// one node, and every leaf sees all its restricted free names on its root
// path.  Isomorphic duplicates are suppressed.  Returns true if the
// enumeration ran to completion (neither the limit nor the callback stopped
// it).
bool enumerate_congruent_forests(const NormalForm& n, std::size_t limit,
                                 const std::function<bool(const LabelledForest&)>& cb);

// Minimal restriction height over the congruence class, with a witness
// forest of that height.  Binders are pruned first.  nullopt when the search
// budget is exhausted or there are too many binders.
struct DepthResult {
  int depth = 0;
  LabelledForest witness;
};
std::optional<DepthResult> depth_exact(const NormalForm& n, std::size_t budget = 2000000);

}  // namespace pihier
