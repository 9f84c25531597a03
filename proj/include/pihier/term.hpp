#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pihier/names.hpp"

namespace pihier {

// Channel sorts: a bare base type t, or t[payload] for a channel whose
// messages have the payload sort.
struct TypeExpr;
using TypeExprPtr = std::shared_ptr<const TypeExpr>;

struct TypeExpr {
  BaseId base = no_base;
  TypeExprPtr payload;  // null for a bare base type
};

TypeExprPtr make_base_type(BaseId b);
TypeExprPtr make_chan_type(BaseId b, TypeExprPtr payload);
bool type_equal(const TypeExprPtr& a, const TypeExprPtr& b);
std::string type_to_string(const Session& s, const TypeExprPtr& t);
// Display-independent serialization ("_" when absent), for keys.
std::string type_key(const TypeExprPtr& t);

enum class PrefixKind { In, Out, Tau };

struct Prefix {
  PrefixKind kind = PrefixKind::Tau;
  NameId chan = no_name;   // In / Out
  NameId name = no_name;   // In: bound variable, Out: message
};

enum class TermKind { Nil, Restrict, Par, Choice, Repl };

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Branch {
  Prefix prefix;
  TermPtr cont;  // never null, Nil if the guard has no continuation
};

// One node kind with per-kind fields; Repl holds its guarded choice's
// branches directly (replication is only defined over choices).
struct Term {
  TermKind kind = TermKind::Nil;

  NameId bound = no_name;       // Restrict
  TypeExprPtr annot;            // Restrict, may be null
  TermPtr body;                 // Restrict

  std::vector<TermPtr> parts;   // Par (flattened, size >= 2)

  std::vector<Branch> branches; // Choice / Repl (size >= 1)
};

TermPtr make_nil();
TermPtr make_restrict(NameId x, TypeExprPtr annot, TermPtr body);
TermPtr make_par(std::vector<TermPtr> parts);
TermPtr make_choice(std::vector<Branch> branches);
TermPtr make_repl(std::vector<Branch> branches);

std::set<NameId> free_names(const TermPtr& t);
// Restriction-bound names with their annotations, in syntactic order.
std::vector<std::pair<NameId, TypeExprPtr>> restriction_names(const TermPtr& t);
// Every bound name: restrictions and input variables.
std::set<NameId> bound_names(const TermPtr& t);

// Free occurrences of `from` become `to`.  Name-uniqueness rules out capture;
// this asserts it anyway.
TermPtr substitute(const TermPtr& t, NameId from, NameId to);
TermPtr substitute(const TermPtr& t, const std::map<NameId, NameId>& sub);

// Fresh ids for every bound name; annotations and free names untouched.
// Returns the new term and the renaming applied.
std::pair<TermPtr, std::map<NameId, NameId>> clone_fresh(Session& s, const TermPtr& t);

bool alpha_equal(const TermPtr& a, const TermPtr& b);

// Strips annotations everywhere (inference runs on bare terms).
TermPtr erase_annotations(const TermPtr& t);
// Installs annotations on restriction binders from the given map; binders not
// in the map keep what they had.
TermPtr annotate(const TermPtr& t, const std::map<NameId, TypeExprPtr>& by_name);

struct ParseError : std::runtime_error {
  ParseError(std::string msg, int line, int col)
      : std::runtime_error(std::move(msg)), line(line), col(col) {}
  int line;
  int col;
};

// Grammar, loosest binding first:
//   P  ::= P '|' P  |  'new' x [':' TY] '.' P  |  M  |  '!' M  |  '0'  |  '(' P ')'
//   M  ::= G ('+' G)*
//   G  ::= PI ['.' P']                    (P' at prefix precedence)
//   PI ::= a '(' x ')' | a '<' b '>' | 'tau' | a '?()' | a '!()'
// 'new' always scopes as far right as it can; prefix binds tighter than '+',
// '+' tighter than '|'.  Nullary shorthand c?().P reads an ignored fresh
// variable, c!().P sends a fresh restricted name (the restriction is hoisted
// just above the enclosing choice so sums stay guarded).
TermPtr parse_term(Session& s, std::string_view src);
TypeExprPtr parse_type(Session& s, std::string_view src);

struct PrettyOptions {
  bool annotations = false;
};
std::string pretty(const Session& s, const TermPtr& t, const PrettyOptions& opts = {});
std::string prefix_to_string(const Session& s, const Prefix& p);

}  // namespace pihier
