#include "pihier/reduction.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <set>
#include <thread>

#include "pihier/tcompat.hpp"
#include "pihier/typing.hpp"

namespace pihier {

namespace {

// appends a continuation normal form at the top level of the successor
void splice(NormalForm& dst, const NormalForm& cont,
            std::vector<NameId>& activated) {
  for (auto& b : cont.binders) {
    dst.binders.push_back(b);
    activated.push_back(b.name);
  }
  for (auto& a : cont.actives) dst.actives.push_back(a);
}

}  // namespace

std::string redex_summary(const Session& s, const Redex& r) {
  if (r.kind == Redex::Kind::Tau)
    return "tau A" + std::to_string(r.sender) + "." +
           std::to_string(r.sender_branch);
  return "comm " + s.display(r.chan) + "<" + s.display(r.msg) + "> A" +
         std::to_string(r.sender) + "." + std::to_string(r.sender_branch) +
         " -> A" + std::to_string(r.receiver) + "." +
         std::to_string(r.receiver_branch);
}

std::vector<std::pair<Redex, NormalForm>> successors(Session& s,
                                                     const NormalForm& n) {
  std::vector<std::pair<Redex, NormalForm>> out;
  auto keep_others = [&](std::size_t i, std::size_t j) {
    NormalForm q;
    q.binders = n.binders;
    for (std::size_t k = 0; k < n.actives.size(); ++k) {
      if ((k == i || k == j) && !n.actives[k].repl) continue;
      q.actives.push_back(n.actives[k]);
    }
    return q;
  };
  const std::size_t none = static_cast<std::size_t>(-1);

  for (std::size_t i = 0; i < n.actives.size(); ++i) {
    const Active& ai = n.actives[i];
    for (std::size_t bi = 0; bi < ai.branches.size(); ++bi) {
      if (ai.branches[bi].prefix.kind != PrefixKind::Tau) continue;
      Redex r;
      r.kind = Redex::Kind::Tau;
      r.sender = i;
      r.sender_branch = bi;
      NormalForm q = keep_others(i, none);
      Active copy;
      const SeqBranch* br = &ai.branches[bi];
      if (ai.repl) {
        copy = clone_fresh_active(s, ai);
        br = &copy.branches[bi];
      }
      splice(q, br->cont, r.activated);
      out.emplace_back(std::move(r), std::move(q));
    }
  }

  for (std::size_t i = 0; i < n.actives.size(); ++i) {
    for (std::size_t j = 0; j < n.actives.size(); ++j) {
      // a single non-replicated choice commits to one branch, so it cannot
      // be sender and receiver at once; two copies of a replication can
      if (i == j && !n.actives[i].repl) continue;
      for (std::size_t bs = 0; bs < n.actives[i].branches.size(); ++bs) {
        const Prefix& ps = n.actives[i].branches[bs].prefix;
        if (ps.kind != PrefixKind::Out) continue;
        for (std::size_t br = 0; br < n.actives[j].branches.size(); ++br) {
          const Prefix& pr = n.actives[j].branches[br].prefix;
          if (pr.kind != PrefixKind::In || pr.chan != ps.chan) continue;
          Redex r;
          r.kind = Redex::Kind::Comm;
          r.sender = i;
          r.receiver = j;
          r.sender_branch = bs;
          r.receiver_branch = br;
          r.chan = ps.chan;
          r.msg = ps.name;
          Active scopy, rcopy;
          const SeqBranch* sb = &n.actives[i].branches[bs];
          const SeqBranch* rb = &n.actives[j].branches[br];
          if (n.actives[i].repl) {
            scopy = clone_fresh_active(s, n.actives[i]);
            sb = &scopy.branches[bs];
          }
          if (n.actives[j].repl) {
            rcopy = clone_fresh_active(s, n.actives[j]);
            rb = &rcopy.branches[br];
          }
          NormalForm q = keep_others(i, j);
          splice(q, sb->cont, r.activated);
          NormalForm received = substitute_nf(rb->cont, rb->prefix.name, r.msg);
          splice(q, received, r.activated);
          out.emplace_back(std::move(r), std::move(q));
        }
      }
    }
  }
  return out;
}

namespace {

// shape key for matching that ignores annotations, so plain queries can be
// tried against annotated states
std::string embed_shape(const Active& a) {
  std::string out = a.repl ? "!" : "";
  std::map<NameId, int> local;
  int next = 0;
  auto name = [&](NameId x) {
    auto it = local.find(x);
    if (it != local.end())
      out += "l" + std::to_string(it->second);
    else
      out += "?";
  };
  auto nf_rec = [&](auto&& self, const NormalForm& n) -> void {
    out += "{" + std::to_string(n.binders.size());
    for (auto& b : n.binders) local.emplace(b.name, next++);
    for (std::size_t i = 0; i < n.actives.size(); ++i) {
      out += i ? "|" : ";";
      const Active& act = n.actives[i];
      if (act.repl) out += "!";
      for (std::size_t k = 0; k < act.branches.size(); ++k) {
        if (k) out += "+";
        const SeqBranch& br = act.branches[k];
        switch (br.prefix.kind) {
          case PrefixKind::Tau:
            out += "T";
            break;
          case PrefixKind::In:
            out += "I";
            name(br.prefix.chan);
            local.emplace(br.prefix.name, next++);
            break;
          case PrefixKind::Out:
            out += "O";
            name(br.prefix.chan);
            out += ",";
            name(br.prefix.name);
            break;
        }
        self(self, br.cont);
      }
    }
    out += "}";
  };
  NormalForm wrap;
  wrap.actives.push_back(a);
  nf_rec(nf_rec, wrap);
  return out;
}

struct Matcher {
  const NormalForm* q = nullptr;
  const NormalForm* p = nullptr;
  std::set<NameId> qbind, pbind;
  std::map<NameId, NameId> sigma;  // q name -> p name, both binders and frees
  std::set<NameId> used;           // p names already taken by sigma
  std::vector<NameId> trail;
  std::vector<std::vector<std::size_t>> cands;
  std::vector<std::size_t> order;
  std::vector<char> pused;
  std::size_t budget = 0;
  bool over = false;

  bool match_name(NameId u, NameId v, std::map<NameId, NameId>& ql,
                  std::set<NameId>& pl) {
    if (budget == 0) {
      over = true;
      return false;
    }
    --budget;
    auto lit = ql.find(u);
    if (lit != ql.end()) return lit->second == v;
    if (pl.count(v)) return false;  // a p-local only matches its partner
    auto sit = sigma.find(u);
    if (sit != sigma.end()) return sit->second == v;
    if (used.count(v)) return false;
    if (qbind.count(u)) {
      if (!pbind.count(v)) return false;
    } else if (u != v && !pbind.count(v)) {
      // a free name of q matches itself, or gets captured by a binder of p
      return false;
    }
    sigma.emplace(u, v);
    used.insert(v);
    trail.push_back(u);
    return true;
  }

  void rollback(std::size_t mark) {
    while (trail.size() > mark) {
      NameId u = trail.back();
      trail.pop_back();
      used.erase(sigma[u]);
      sigma.erase(u);
    }
  }

  bool match_nf(const NormalForm& a, const NormalForm& b,
                std::map<NameId, NameId>& ql, std::set<NameId>& pl) {
    if (a.binders.size() != b.binders.size()) return false;
    if (a.actives.size() != b.actives.size()) return false;
    std::vector<NameId> added;
    for (std::size_t i = 0; i < a.binders.size(); ++i) {
      ql[a.binders[i].name] = b.binders[i].name;
      pl.insert(b.binders[i].name);
      added.push_back(a.binders[i].name);
    }
    bool ok = true;
    for (std::size_t i = 0; ok && i < a.actives.size(); ++i)
      ok = match_active(a.actives[i], b.actives[i], ql, pl);
    for (NameId u : added) {
      pl.erase(ql[u]);
      ql.erase(u);
    }
    return ok;
  }

  bool match_active(const Active& a, const Active& b,
                    std::map<NameId, NameId>& ql, std::set<NameId>& pl) {
    if (a.repl != b.repl || a.branches.size() != b.branches.size())
      return false;
    for (std::size_t i = 0; i < a.branches.size(); ++i) {
      const SeqBranch& x = a.branches[i];
      const SeqBranch& y = b.branches[i];
      if (x.prefix.kind != y.prefix.kind) return false;
      bool ok = true;
      switch (x.prefix.kind) {
        case PrefixKind::Tau:
          ok = match_nf(x.cont, y.cont, ql, pl);
          break;
        case PrefixKind::Out:
          ok = match_name(x.prefix.chan, y.prefix.chan, ql, pl) &&
               match_name(x.prefix.name, y.prefix.name, ql, pl) &&
               match_nf(x.cont, y.cont, ql, pl);
          break;
        case PrefixKind::In: {
          if (!match_name(x.prefix.chan, y.prefix.chan, ql, pl)) return false;
          ql[x.prefix.name] = y.prefix.name;
          pl.insert(y.prefix.name);
          ok = match_nf(x.cont, y.cont, ql, pl);
          pl.erase(y.prefix.name);
          ql.erase(x.prefix.name);
          break;
        }
      }
      if (!ok) return false;
    }
    return true;
  }

  bool dfs(std::size_t k) {
    if (k == order.size()) return true;
    std::size_t qi = order[k];
    for (std::size_t pi : cands[qi]) {
      if (pused[pi]) continue;
      std::size_t mark = trail.size();
      std::map<NameId, NameId> ql;
      std::set<NameId> pl;
      if (match_active(q->actives[qi], p->actives[pi], ql, pl)) {
        pused[pi] = 1;
        if (dfs(k + 1)) return true;
        pused[pi] = 0;
      }
      rollback(mark);
      if (over) return false;
    }
    return false;
  }
};

}  // namespace

Verdict embeds(const NormalForm& q0, const NormalForm& p0, std::size_t budget) {
  Matcher m;
  NormalForm q = prune(q0), p = prune(p0);
  m.q = &q;
  m.p = &p;
  m.budget = budget;
  for (auto& b : q.binders) m.qbind.insert(b.name);
  for (auto& b : p.binders) m.pbind.insert(b.name);

  std::vector<std::string> pshapes(p.actives.size());
  for (std::size_t i = 0; i < p.actives.size(); ++i)
    pshapes[i] = embed_shape(p.actives[i]);
  m.cands.resize(q.actives.size());
  for (std::size_t i = 0; i < q.actives.size(); ++i) {
    std::string qs = embed_shape(q.actives[i]);
    for (std::size_t j = 0; j < p.actives.size(); ++j)
      if (pshapes[j] == qs) m.cands[i].push_back(j);
    if (m.cands[i].empty()) return Verdict::No;
    m.order.push_back(i);
  }
  // place the most constrained actives first
  std::stable_sort(m.order.begin(), m.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return m.cands[a].size() < m.cands[b].size();
                   });
  m.pused.assign(p.actives.size(), 0);
  if (m.dfs(0)) return Verdict::Yes;
  return m.over ? Verdict::Unknown : Verdict::No;
}

namespace {

void for_indexes(std::size_t count, unsigned jobs,
                 const std::function<void(std::size_t)>& f) {
  if (jobs <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) f(i);
    });
  for (auto& th : pool) th.join();
}

// BFS over canonical keys; on_state may stop the walk early
StateGraph explore_impl(
    Session& s, const TermPtr& t, const ExploreOptions& opts,
    const std::function<bool(StateGraph&, std::size_t)>& on_state) {
  StateGraph g;
  NormalForm root = prune(nf(t));
  g.keys.push_back(canonical(root));
  g.states.push_back(std::move(root));
  g.depth.push_back(0);
  g.index.emplace(g.keys[0], 0);
  g.exhausted = true;
  if (on_state && !on_state(g, 0)) return g;

  std::set<std::string> edge_seen;
  for (std::size_t cur = 0; cur < g.states.size(); ++cur) {
    auto succ = successors(s, g.states[cur]);
    std::vector<NormalForm> pruned(succ.size());
    std::vector<std::string> keys(succ.size());
    for_indexes(succ.size(), opts.jobs, [&](std::size_t k) {
      pruned[k] = prune(succ[k].second);
      keys[k] = canonical(pruned[k]);
    });
    bool can_extend = g.depth[cur] < opts.max_depth;
    for (std::size_t k = 0; k < succ.size(); ++k) {
      auto it = g.index.find(keys[k]);
      std::size_t to;
      if (it == g.index.end()) {
        if (!can_extend || g.states.size() >= opts.max_states) {
          g.exhausted = false;
          continue;
        }
        to = g.states.size();
        g.index.emplace(keys[k], to);
        g.keys.push_back(keys[k]);
        g.states.push_back(std::move(pruned[k]));
        g.depth.push_back(g.depth[cur] + 1);
        if (on_state && !on_state(g, to)) return g;
      } else {
        to = it->second;
      }
      std::string summ = redex_summary(s, succ[k].first);
      if (edge_seen.insert(g.keys[cur] + "\n" + keys[k] + "\n" + summ).second)
        g.edges.push_back({cur, to, std::move(summ)});
    }
  }
  return g;
}

}  // namespace

StateGraph explore(Session& s, const TermPtr& t, const ExploreOptions& opts) {
  return explore_impl(s, t, opts, nullptr);
}

std::string graph_to_json(const Session& s, const StateGraph& g) {
  nlohmann::json j;
  j["exhausted"] = g.exhausted;
  j["state_count"] = g.states.size();
  j["edge_count"] = g.edges.size();
  j["states"] = nlohmann::json::array();
  for (std::size_t i = 0; i < g.states.size(); ++i) {
    nlohmann::json e;
    e["id"] = i;
    e["depth"] = g.depth[i];
    e["term"] = pretty(s, to_term(g.states[i]), {.annotations = true});
    j["states"].push_back(std::move(e));
  }
  j["edges"] = nlohmann::json::array();
  for (auto& e : g.edges)
    j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"redex", e.redex}});
  return j.dump(2);
}

std::string graph_to_dot(const Session& s, const StateGraph& g) {
  auto esc = [](const std::string& in) {
    std::string out;
    for (char c : in) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  };
  std::string out = "digraph reach {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < g.states.size(); ++i) {
    out += "  s" + std::to_string(i) + " [shape=box, label=\"" +
           esc(pretty(s, to_term(g.states[i]))) + "\"";
    if (i == 0) out += ", peripheries=2";
    out += "];\n";
  }
  for (auto& e : g.edges)
    out += "  s" + std::to_string(e.from) + " -> s" + std::to_string(e.to) +
           " [label=\"" + esc(e.redex) + "\"];\n";
  out += "}\n";
  return out;
}

CoverResult cover(Session& s, const TermPtr& t, const TermPtr& query,
                  const ExploreOptions& opts) {
  CoverResult res;
  NormalForm q = prune(nf(query));
  StateGraph g =
      explore_impl(s, t, opts, [&](StateGraph& gg, std::size_t idx) {
        switch (embeds(q, gg.states[idx])) {
          case Verdict::Yes:
            res.outcome = CoverOutcome::Covered;
            res.witness = idx;
            return false;
          case Verdict::Unknown:
            res.embed_budget_hit = true;
            return true;
          case Verdict::No:
            return true;
        }
        return true;
      });
  res.states_explored = g.states.size();
  if (res.outcome != CoverOutcome::Covered)
    res.outcome = g.exhausted && !res.embed_budget_hit
                      ? CoverOutcome::NotCoverable
                      : CoverOutcome::Unknown;
  return res;
}

InvarianceReport check_invariance(Session& s, const Hierarchy& h,
                                  const TypeEnv& env, const TermPtr& t,
                                  const ExploreOptions& opts) {
  InvarianceReport rep;
  StateGraph g =
      explore_impl(s, t, opts, [&](StateGraph& gg, std::size_t idx) {
        TypingReport tr = typecheck(s, h, env, gg.states[idx]);
        if (!tr.ok) {
          rep.ok = false;
          rep.failing_key = gg.keys[idx];
          rep.what = "state fails to typecheck: " + report_to_text(s, tr);
          return false;
        }
        if (!is_tshaped(h, to_term(gg.states[idx]))) {
          rep.ok = false;
          rep.failing_key = gg.keys[idx];
          rep.what = "state is not shaped for the hierarchy";
          return false;
        }
        ++rep.states_checked;
        return true;
      });
  rep.exhausted = g.exhausted && rep.ok;
  return rep;
}

}  // namespace pihier
