#pragma once

// Randomized typing-property trials shared by the property suite and the
// acceptance run: a generator of small annotated terms over a fresh chain
// hierarchy, plus one runner per property.

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "pihier/hierarchy.hpp"
#include "pihier/normal.hpp"
#include "pihier/term.hpp"
#include "pihier/typing.hpp"

namespace propsupport {

using namespace pihier;

struct TrialSetup {
  Hierarchy h;
  std::vector<BaseId> chain;
  TypeEnv env;
  TermPtr term;
};

class TermGen {
 public:
  TermGen(Session& s, std::mt19937& rng, int trial)
      : s_(s), rng_(rng), tag_("_t" + std::to_string(trial)) {}

  TrialSetup make() {
    TrialSetup out;
    for (int i = 0; i < 5; ++i)
      out.chain.push_back(s_.intern_base("b" + std::to_string(i) + tag_));
    out.h = Hierarchy::chain(out.chain);
    chain_ = out.chain;

    for (int i = 0; i < 2; ++i) {
      NameId f = s_.intern_free("f" + std::to_string(i) + tag_);
      TypeExprPtr ty = make_chan_type(pick_base(), rand_type(1));
      out.env[f] = ty;
      scope_.emplace_back(f, ty);
    }
    out.term = gen(3);
    scope_.clear();
    return out;
  }

 private:
  BaseId pick_base() { return chain_[rng_() % chain_.size()]; }

  std::size_t roll(std::size_t n) { return rng_() % n; }

  TypeExprPtr rand_type(int depth) {
    if (depth <= 0 || roll(2) == 0) return make_base_type(pick_base());
    return make_chan_type(pick_base(), rand_type(depth - 1));
  }

  NameId fresh(const char* stem) {
    return s_.fresh_name(stem + std::to_string(counter_++) + tag_);
  }

  // Picks a channel-typed name from scope, or no_name.
  int pick_channel() {
    std::vector<int> cands;
    for (std::size_t i = 0; i < scope_.size(); ++i)
      if (scope_[i].second->payload) cands.push_back(static_cast<int>(i));
    if (cands.empty()) return -1;
    return cands[roll(cands.size())];
  }

  Branch gen_branch(int depth) {
    std::size_t mode = roll(10);
    int ci = pick_channel();
    if (ci >= 0 && mode < 4) {  // input
      NameId x = fresh("x");
      NameId chan = scope_[ci].first;
      scope_.emplace_back(x, scope_[ci].second->payload);
      TermPtr cont = gen(depth - 1);
      scope_.pop_back();
      return {{PrefixKind::In, chan, x}, cont};
    }
    if (ci >= 0 && mode < 8) {  // output, occasionally mistyped on purpose
      std::string want = type_key(scope_[ci].second->payload);
      std::vector<NameId> vs;
      for (const auto& [n, ty] : scope_)
        if (type_key(ty) == want) vs.push_back(n);
      NameId msg = no_name;
      if (!vs.empty() && roll(10) != 0)
        msg = vs[roll(vs.size())];
      else if (!scope_.empty())
        msg = scope_[roll(scope_.size())].first;
      if (msg != no_name)
        return {{PrefixKind::Out, scope_[ci].first, msg}, gen(depth - 1)};
    }
    return {{PrefixKind::Tau, no_name, no_name}, gen(depth - 1)};
  }

  TermPtr gen(int depth) {
    if (depth <= 0) return make_nil();
    std::size_t r = roll(100);
    if (r < 25) {
      NameId x = fresh("n");
      TypeExprPtr ty = rand_type(2);
      scope_.emplace_back(x, ty);
      TermPtr body = gen(depth - 1);
      scope_.pop_back();
      return make_restrict(x, ty, body);
    }
    if (r < 45) return make_par({gen(depth - 1), gen(depth - 1)});
    if (r < 80) {
      std::vector<Branch> bs;
      std::size_t n = 1 + roll(2);
      for (std::size_t i = 0; i < n; ++i) bs.push_back(gen_branch(depth));
      return make_choice(std::move(bs));
    }
    if (r < 92) return make_repl({gen_branch(depth)});
    return make_nil();
  }

  Session& s_;
  std::mt19937& rng_;
  std::string tag_;
  std::vector<BaseId> chain_;
  std::vector<std::pair<NameId, TypeExprPtr>> scope_;
  int counter_ = 0;
};

struct PropertyStats {
  int trials = 0;
  int applicable = 0;  // trials where the property's premise held
  int failures = 0;
};

// Extending the hierarchy with a fresh leaf and the environment with an
// unused name never changes the typing verdict.
inline PropertyStats run_weakening(int trials, unsigned seed) {
  Session s;
  std::mt19937 rng(seed);
  PropertyStats st;
  for (int k = 0; k < trials; ++k) {
    TrialSetup t = TermGen(s, rng, k).make();
    bool before = typecheck_term(s, t.h, t.env, t.term).ok;

    Hierarchy wider = t.h;
    BaseId extra = s.intern_base("w" + std::to_string(k));
    wider.add_base(extra);
    wider.add_edge(t.chain[rng() % t.chain.size()], extra);
    TypeEnv env = t.env;
    env[s.intern_free("wn" + std::to_string(k))] = make_base_type(extra);
    bool after = typecheck_term(s, wider, env, t.term).ok;

    ++st.trials;
    if (before) ++st.applicable;
    if (before != after) ++st.failures;
  }
  return st;
}

inline TermPtr shuffled(Session& s, std::mt19937& rng, const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Nil:
      return t;
    case TermKind::Restrict:
      return make_restrict(t->bound, t->annot, shuffled(s, rng, t->body));
    case TermKind::Par: {
      std::vector<TermPtr> parts;
      for (const TermPtr& p : t->parts) parts.push_back(shuffled(s, rng, p));
      std::shuffle(parts.begin(), parts.end(), rng);
      return make_par(std::move(parts));
    }
    case TermKind::Choice:
    case TermKind::Repl: {
      std::vector<Branch> bs;
      for (const Branch& b : t->branches)
        bs.push_back({b.prefix, shuffled(s, rng, b.cont)});
      std::shuffle(bs.begin(), bs.end(), rng);
      return t->kind == TermKind::Choice ? make_choice(std::move(bs))
                                         : make_repl(std::move(bs));
    }
  }
  return t;
}

// Reordering parallel components and branches, or renormalizing, never
// changes the typing verdict.
inline PropertyStats run_congruence(int trials, unsigned seed) {
  Session s;
  std::mt19937 rng(seed);
  PropertyStats st;
  for (int k = 0; k < trials; ++k) {
    TrialSetup t = TermGen(s, rng, k).make();
    bool base = typecheck_term(s, t.h, t.env, t.term).ok;
    bool mixed = typecheck_term(s, t.h, t.env, shuffled(s, rng, t.term)).ok;
    bool renorm = typecheck_term(s, t.h, t.env, to_term(nf(t.term))).ok;

    ++st.trials;
    if (base) ++st.applicable;
    if (base != mixed || base != renorm) ++st.failures;
  }
  return st;
}

// Replacing a free name with a fresh one of the same type preserves
// typability.
inline PropertyStats run_substitution(int trials, unsigned seed) {
  Session s;
  std::mt19937 rng(seed);
  PropertyStats st;
  for (int k = 0; k < trials; ++k) {
    TrialSetup t = TermGen(s, rng, k).make();
    ++st.trials;
    std::vector<NameId> used;
    for (NameId x : free_names(t.term))
      if (t.env.count(x)) used.push_back(x);
    if (used.empty()) continue;
    if (!typecheck_term(s, t.h, t.env, t.term).ok) continue;
    ++st.applicable;

    NameId from = used[rng() % used.size()];
    NameId to = s.intern_free("sub" + std::to_string(k));
    TypeEnv env = t.env;
    env[to] = t.env.at(from);
    if (!typecheck_term(s, t.h, env, substitute(t.term, from, to)).ok)
      ++st.failures;
  }
  return st;
}

}  // namespace propsupport
