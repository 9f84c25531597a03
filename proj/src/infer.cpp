#include "pihier/infer.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <set>

#include "pihier/normal.hpp"
#include "pihier/tcompat.hpp"
#include "pihier/typing.hpp"

namespace pihier {

namespace {

struct Generator {
  const Session* s = nullptr;
  ConstraintSet out;
  std::set<NameId> dom;  // names with a known outer type at this point

  void fact(NameId l, NameId r, std::string origin) {
    out.clauses.push_back({{OrderAtom{l, r, std::move(origin)}}});
  }

  void walk_nf(const NormalForm& n) {
    auto tied = tied_matrix(n);
    for (std::size_t i = 0; i < n.actives.size(); ++i) {
      for (const NormalForm::Binder& b : n.binders) {
        if (!name_tied(n, tied, b.name, i)) continue;
        for (NameId y : free_names(n.actives[i])) {
          if (!dom.count(y)) continue;
          fact(y, b.name,
               "restriction " + s->display(b.name) +
                   " stays tied to a term using " + s->display(y));
        }
      }
    }
    for (const NormalForm::Binder& b : n.binders) dom.insert(b.name);
    for (const Active& a : n.actives)
      for (const SeqBranch& br : a.branches) walk_branch(br);
    for (const NormalForm::Binder& b : n.binders) dom.erase(b.name);
  }

  void walk_branch(const SeqBranch& br) {
    NameId a = br.prefix.chan, x = br.prefix.name;
    switch (br.prefix.kind) {
      case PrefixKind::Tau:
        walk_nf(br.cont);
        break;
      case PrefixKind::Out:
        out.flows.push_back(
            {a, x, "send of " + s->display(x) + " on " + s->display(a)});
        walk_nf(br.cont);
        break;
      case PrefixKind::In: {
        out.flows.push_back({a, x, "receive on " + s->display(a)});
        std::set<NameId> offenders;
        for (std::size_t i : migratable_indexes(x, br.cont))
          for (NameId y : free_names(br.cont.actives[i]))
            if (y != a && dom.count(y)) offenders.insert(y);
        for (NameId y : offenders) {
          OrderClause cl;
          cl.atoms.push_back({y, a,
                              s->display(y) + " sits beside the part of a " +
                                  "receive on " + s->display(a) +
                                  " that may migrate"});
          cl.atoms.push_back(
              {x, a, "received name " + s->display(x) + " kept below " +
                         s->display(a)});
          out.clauses.push_back(std::move(cl));
        }
        dom.insert(x);
        walk_nf(br.cont);
        dom.erase(x);
        break;
      }
    }
  }
};

}  // namespace

ConstraintSet generate_constraints(const Session& s, const TermPtr& t) {
  Generator g;
  g.s = &s;
  TermPtr plain = erase_annotations(t);
  for (NameId x : free_names(plain)) g.dom.insert(x);
  auto restr = restriction_names(plain);
  for (NameId x : free_names(plain))
    for (auto& [r, annot] : restr)
      g.fact(x, r,
             "free name " + s.display(x) + " kept below restriction " +
                 s.display(r));
  g.walk_nf(nf(plain));
  return g.out;
}

UnifyResult unify_flows(const ConstraintSet& c,
                        const std::vector<NameId>& universe) {
  std::map<NameId, std::uint32_t> idx;
  std::vector<NameId> names;
  auto touch = [&](NameId x) {
    if (idx.emplace(x, names.size()).second) names.push_back(x);
  };
  for (NameId x : universe) touch(x);
  for (auto& f : c.flows) {
    touch(f.chan);
    touch(f.payload);
  }
  for (auto& cl : c.clauses)
    for (auto& a : cl.atoms) {
      touch(a.lhs);
      touch(a.rhs);
    }

  std::vector<std::uint32_t> parent(names.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<std::optional<std::uint32_t>> pay(names.size());
  std::vector<std::pair<std::uint32_t, std::uint32_t>> work;
  auto merge = [&](std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    if (pay[b]) {
      if (pay[a])
        work.emplace_back(*pay[a], *pay[b]);
      else
        pay[a] = pay[b];
    }
  };
  for (auto& f : c.flows) {
    std::uint32_t ch = find(idx[f.chan]);
    std::uint32_t pl = find(idx[f.payload]);
    if (pay[ch])
      work.emplace_back(*pay[ch], pl);
    else
      pay[ch] = pl;
    while (!work.empty()) {
      auto [a, b] = work.back();
      work.pop_back();
      merge(a, b);
    }
  }

  // classes numbered by their smallest member name
  std::map<std::uint32_t, NameId> owner_of_root;
  for (std::uint32_t i = 0; i < names.size(); ++i) {
    std::uint32_t r = find(i);
    auto it = owner_of_root.find(r);
    if (it == owner_of_root.end() || names[i] < it->second)
      owner_of_root[r] = names[i];
  }
  std::vector<std::pair<NameId, std::uint32_t>> ordered;
  for (auto& [r, o] : owner_of_root) ordered.emplace_back(o, r);
  std::sort(ordered.begin(), ordered.end());

  UnifyResult res;
  std::map<std::uint32_t, std::uint32_t> cls;
  for (auto& [o, r] : ordered) {
    cls[r] = static_cast<std::uint32_t>(res.owner.size());
    res.owner.push_back(o);
  }
  res.payload.resize(ordered.size());
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    auto p = pay[find(ordered[k].second)];
    if (p) res.payload[k] = cls[find(*p)];
  }
  for (std::uint32_t i = 0; i < names.size(); ++i)
    res.type_class[names[i]] = cls[find(i)];

  // a type may not carry itself, walk the payload chains for loops
  std::vector<int> color(res.owner.size(), 0);
  for (std::uint32_t k = 0; k < res.owner.size(); ++k) {
    if (color[k]) continue;
    std::vector<std::uint32_t> path;
    std::uint32_t cur = k;
    while (true) {
      if (color[cur] == 2) break;
      if (color[cur] == 1) {
        res.ok = false;
        auto start = std::find(path.begin(), path.end(), cur);
        for (auto it = start; it != path.end(); ++it)
          res.cycle.push_back(res.owner[*it]);
        return res;
      }
      color[cur] = 1;
      path.push_back(cur);
      if (!res.payload[cur]) break;
      cur = *res.payload[cur];
    }
    for (std::uint32_t v : path) color[v] = 2;
  }
  return res;
}

namespace {

using Chain = std::vector<std::uint32_t>;

// Kahn order over the atoms, smallest id first; untouched variables are
// appended afterwards in id order.  Empty when the atoms are cyclic.
std::optional<Chain> topo_chain(std::size_t n,
                                const std::set<std::pair<std::uint32_t,
                                                         std::uint32_t>>& e) {
  std::vector<char> touched(n, 0);
  std::vector<std::size_t> indeg(n, 0);
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (auto& [a, b] : e) {
    touched[a] = touched[b] = 1;
    ++indeg[b];
    adj[a].push_back(b);
  }
  std::set<std::uint32_t> ready;
  std::size_t active = 0;
  for (std::uint32_t v = 0; v < n; ++v)
    if (touched[v]) {
      ++active;
      if (indeg[v] == 0) ready.insert(v);
    }
  Chain out;
  while (!ready.empty()) {
    std::uint32_t v = *ready.begin();
    ready.erase(ready.begin());
    out.push_back(v);
    for (std::uint32_t w : adj[v])
      if (--indeg[w] == 0) ready.insert(w);
  }
  if (out.size() < active) return std::nullopt;
  for (std::uint32_t v = 0; v < n; ++v)
    if (!touched[v]) out.push_back(v);
  return out;
}

std::vector<ResolvedAtom> shortest_fact_cycle(
    std::size_t n, const std::vector<ResolvedAtom>& facts) {
  std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>> adj(n);
  for (std::size_t i = 0; i < facts.size(); ++i)
    adj[facts[i].lhs].emplace_back(facts[i].rhs, i);
  std::vector<ResolvedAtom> best;
  for (std::uint32_t src = 0; src < n; ++src) {
    std::vector<std::size_t> dist(n, SIZE_MAX), via(n, SIZE_MAX);
    std::vector<std::uint32_t> q{src};
    dist[src] = 0;
    for (std::size_t h = 0; h < q.size(); ++h) {
      std::uint32_t v = q[h];
      for (auto& [w, ei] : adj[v])
        if (dist[w] == SIZE_MAX) {
          dist[w] = dist[v] + 1;
          via[w] = ei;
          q.push_back(w);
        } else if (w == src && (best.empty() || dist[v] + 1 < best.size())) {
          std::vector<ResolvedAtom> cyc{facts[ei]};
          for (std::uint32_t u = v; u != src; u = facts[via[u]].lhs)
            cyc.push_back(facts[via[u]]);
          std::reverse(cyc.begin(), cyc.end());
          best = std::move(cyc);
        }
    }
  }
  return best;
}

}  // namespace

OrderSolution solve_order(
    const OrderProblem& p, std::size_t max_backtracks,
    const std::function<bool(const std::vector<std::uint32_t>&)>& accept) {
  OrderSolution sol;
  std::vector<ResolvedAtom> facts;
  std::vector<const std::vector<ResolvedAtom>*> disj;
  for (auto& cl : p.clauses) {
    if (cl.empty()) return sol;
    if (cl.size() == 1)
      facts.push_back(cl[0]);
    else
      disj.push_back(&cl);
  }
  for (auto& a : facts)
    if (a.lhs == a.rhs) {
      sol.core = {a};
      return sol;
    }
  std::set<std::pair<std::uint32_t, std::uint32_t>> base_edges;
  for (auto& a : facts) base_edges.emplace(a.lhs, a.rhs);
  if (!topo_chain(p.base_count, base_edges)) {
    sol.core = shortest_fact_cycle(p.base_count, facts);
    return sol;
  }

  std::vector<ResolvedAtom> chosen;
  auto edges_now = [&] {
    auto e = base_edges;
    for (auto& a : chosen) e.emplace(a.lhs, a.rhs);
    return e;
  };
  std::function<bool(std::size_t)> go = [&](std::size_t k) -> bool {
    if (sol.inconclusive) return false;
    if (k == disj.size()) {
      auto chain = topo_chain(p.base_count, edges_now());
      if (!chain) return false;
      if (accept && !accept(*chain)) return false;
      sol.chain = std::move(*chain);
      return true;
    }
    for (auto& a : *disj[k]) {
      if (a.lhs == a.rhs) continue;
      chosen.push_back(a);
      bool ok = topo_chain(p.base_count, edges_now()).has_value() && go(k + 1);
      if (ok) return true;
      chosen.pop_back();
      if (sol.inconclusive) return false;
      if (++sol.backtracks > max_backtracks) {
        sol.inconclusive = true;
        return false;
      }
    }
    return false;
  };
  sol.ok = go(0);
  if (sol.inconclusive) sol.ok = false;
  return sol;
}

namespace {

std::string atom_text(const Session& s, NameId l, NameId r) {
  return "base(" + s.display(l) + ") < base(" + s.display(r) + ")";
}

}  // namespace

InferenceResult infer(Session& s, const TermPtr& t, const InferOptions& opts) {
  InferenceResult res;
  TermPtr plain = erase_annotations(t);
  res.constraints = generate_constraints(s, plain);

  std::set<NameId> uni = free_names(plain);
  for (NameId x : bound_names(plain)) uni.insert(x);
  UnifyResult u =
      unify_flows(res.constraints, {uni.begin(), uni.end()});
  if (!u.ok) {
    res.status = InferenceResult::Status::Unsat;
    std::string loop;
    for (NameId x : u.cycle) loop += (loop.empty() ? "" : " -> ") + s.display(x);
    res.core.push_back("no finite types exist: the type of " +
                       s.display(u.cycle.front()) +
                       " would contain itself through " + loop);
    return res;
  }

  // one session base per class, named after its smallest member
  std::vector<BaseId> base_of(u.owner.size());
  for (std::size_t k = 0; k < u.owner.size(); ++k) {
    std::string want = "t_" + s.display(u.owner[k]);
    for (int n = 1;; ++n) {
      std::string cand = n == 1 ? want : want + "_" + std::to_string(n);
      std::size_t before = s.base_count();
      BaseId id = s.intern_base(cand);
      if (s.base_count() > before) {
        base_of[k] = id;
        break;
      }
    }
  }
  std::vector<TypeExprPtr> ground(u.owner.size());
  std::function<TypeExprPtr(std::uint32_t)> type_of =
      [&](std::uint32_t k) -> TypeExprPtr {
    if (ground[k]) return ground[k];
    ground[k] = u.payload[k]
                    ? make_chan_type(base_of[k], type_of(*u.payload[k]))
                    : make_base_type(base_of[k]);
    return ground[k];
  };
  for (auto& [name, annot] : restriction_names(plain))
    res.annotation[name] = type_of(u.type_class.at(name));
  for (NameId x : free_names(plain)) res.env[x] = type_of(u.type_class.at(x));
  TermPtr annotated = annotate(plain, res.annotation);

  OrderProblem prob;
  prob.base_count = u.owner.size();
  for (std::size_t k = 0; k < u.owner.size(); ++k)
    prob.base_names.push_back(s.base_display(base_of[k]));
  std::set<std::pair<std::uint32_t, std::uint32_t>> fact_seen;
  for (auto& cl : res.constraints.clauses) {
    std::vector<ResolvedAtom> r;
    for (auto& a : cl.atoms) {
      ResolvedAtom ra;
      ra.lhs = u.type_class.at(a.lhs);
      ra.rhs = u.type_class.at(a.rhs);
      ra.origin = atom_text(s, a.lhs, a.rhs) + ": " + a.origin;
      r.push_back(std::move(ra));
    }
    if (r.size() == 1) {
      if (r[0].lhs == r[0].rhs) {
        res.status = InferenceResult::Status::Unsat;
        res.core.push_back(r[0].origin + " is required");
        res.core.push_back("but unification forces base(" +
                           s.display(cl.atoms[0].lhs) + ") = base(" +
                           s.display(cl.atoms[0].rhs) + ")");
        return res;
      }
      if (fact_seen.emplace(r[0].lhs, r[0].rhs).second)
        prob.clauses.push_back(std::move(r));
      continue;
    }
    std::vector<ResolvedAtom> kept;
    std::set<std::pair<std::uint32_t, std::uint32_t>> in_clause;
    bool satisfied = false;
    for (auto& ra : r) {
      if (ra.lhs == ra.rhs) continue;
      if (fact_seen.count({ra.lhs, ra.rhs})) satisfied = true;
      if (in_clause.emplace(ra.lhs, ra.rhs).second) kept.push_back(ra);
    }
    if (satisfied) continue;
    if (kept.empty()) {
      res.status = InferenceResult::Status::Unsat;
      res.core.push_back("every alternative of a receive condition is "
                         "contradictory after unification");
      for (auto& a : cl.atoms) res.core.push_back(atom_text(s, a.lhs, a.rhs));
      return res;
    }
    if (kept.size() == 1 && fact_seen.emplace(kept[0].lhs, kept[0].rhs).second)
      prob.clauses.push_back({kept[0]});
    else if (kept.size() > 1)
      prob.clauses.push_back(std::move(kept));
  }

  std::string first_reject;
  auto validate = [&](const Chain& chain) {
    std::vector<BaseId> ids;
    for (std::uint32_t k : chain) ids.push_back(base_of[k]);
    Hierarchy h = Hierarchy::chain(ids);
    if (!is_tshaped(h, annotated)) {
      if (first_reject.empty())
        first_reject = "an acyclic ordering was found but the annotated "
                       "term is not shaped for it";
      return false;
    }
    TypingReport tr = typecheck_term(s, h, res.env, annotated);
    if (!tr.ok) {
      if (first_reject.empty())
        first_reject = "an acyclic ordering was found but the term does not "
                       "typecheck under it: " +
                       report_to_text(s, tr);
      return false;
    }
    std::string why;
    if (!p_safe(s, h, res.env, annotated, &why)) {
      if (first_reject.empty())
        first_reject = "an acyclic ordering was found but the environment "
                       "is not safe: " +
                       why;
      return false;
    }
    return true;
  };
  OrderSolution sol = solve_order(prob, opts.max_backtracks, validate);
  res.backtracks = sol.backtracks;
  if (sol.inconclusive) {
    res.status = InferenceResult::Status::Inconclusive;
    res.core.push_back("gave up after " + std::to_string(sol.backtracks) +
                       " backtracks");
    return res;
  }
  if (!sol.ok) {
    res.status = InferenceResult::Status::Unsat;
    if (!sol.core.empty()) {
      res.core.push_back("the base type requirements form a cycle");
      for (auto& a : sol.core) res.core.push_back(a.origin);
    } else {
      res.core.push_back(
          "no ordering of the base types satisfies every condition");
      if (!first_reject.empty()) res.core.push_back(first_reject);
    }
    return res;
  }
  std::vector<BaseId> ids;
  for (std::uint32_t k : sol.chain) ids.push_back(base_of[k]);
  res.hierarchy = Hierarchy::chain(ids);
  res.status = InferenceResult::Status::Ok;
  return res;
}

namespace {

const char* status_name(InferenceResult::Status st) {
  switch (st) {
    case InferenceResult::Status::Ok:
      return "ok";
    case InferenceResult::Status::Unsat:
      return "unsat";
    case InferenceResult::Status::Inconclusive:
      return "inconclusive";
  }
  return "unsat";
}

}  // namespace

std::string inference_to_text(const Session& s, const InferenceResult& r) {
  std::string out = std::string("status: ") + status_name(r.status) + "\n";
  if (r.status == InferenceResult::Status::Ok) {
    out += "hierarchy:\n";
    std::string h = hierarchy_to_text(s, r.hierarchy);
    if (h.empty()) h = "(empty)\n";
    out += h;
    out += "annotations:\n";
    for (auto& [name, ty] : r.annotation)
      out += "  " + s.display(name) + " : " + type_to_string(s, ty) + "\n";
    if (!r.env.empty()) {
      out += "environment:\n";
      for (auto& [name, ty] : r.env)
        out += "  " + s.display(name) + " : " + type_to_string(s, ty) + "\n";
    }
  }
  for (auto& line : r.core) out += line + "\n";
  if (r.backtracks) out += "backtracks: " + std::to_string(r.backtracks) + "\n";
  return out;
}

std::string inference_to_json(const Session& s, const InferenceResult& r) {
  nlohmann::json j;
  j["status"] = status_name(r.status);
  if (r.status == InferenceResult::Status::Ok)
    j["hierarchy"] = hierarchy_to_text(s, r.hierarchy);
  else
    j["hierarchy"] = nullptr;
  j["annotations"] = nlohmann::json::array();
  for (auto& [name, ty] : r.annotation)
    j["annotations"].push_back(
        {{"name", s.display(name)}, {"type", type_to_string(s, ty)}});
  j["env"] = nlohmann::json::array();
  for (auto& [name, ty] : r.env)
    j["env"].push_back(
        {{"name", s.display(name)}, {"type", type_to_string(s, ty)}});
  nlohmann::json flows = nlohmann::json::array();
  for (auto& f : r.constraints.flows)
    flows.push_back("type(" + s.display(f.chan) + ") = b[type(" +
                    s.display(f.payload) + ")]");
  nlohmann::json clauses = nlohmann::json::array();
  for (auto& cl : r.constraints.clauses) {
    nlohmann::json one = nlohmann::json::array();
    for (auto& a : cl.atoms) one.push_back(atom_text(s, a.lhs, a.rhs));
    clauses.push_back(std::move(one));
  }
  j["constraints"] = {{"flows", std::move(flows)},
                      {"clauses", std::move(clauses)}};
  j["core"] = r.core;
  j["backtracks"] = r.backtracks;
  return j.dump(2);
}

}  // namespace pihier
