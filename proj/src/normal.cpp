#include "pihier/normal.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace pihier {

NormalForm nf(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Nil:
      return {};
    case TermKind::Restrict: {
      NormalForm n = nf(t->body);
      NormalForm out;
      out.binders.push_back({t->bound, t->annot});
      out.binders.insert(out.binders.end(), n.binders.begin(), n.binders.end());
      out.actives = std::move(n.actives);
      return out;
    }
    case TermKind::Par: {
      NormalForm acc;  // zero
      for (auto& p : t->parts) {
        NormalForm q = nf(p);
        if (q.is_zero()) continue;
        if (acc.is_zero()) {
          acc = std::move(q);
          continue;
        }
        acc.binders.insert(acc.binders.end(), q.binders.begin(), q.binders.end());
        acc.actives.insert(acc.actives.end(), std::make_move_iterator(q.actives.begin()),
                           std::make_move_iterator(q.actives.end()));
      }
      return acc;
    }
    case TermKind::Choice:
    case TermKind::Repl: {
      Active a;
      a.repl = t->kind == TermKind::Repl;
      for (auto& b : t->branches) a.branches.push_back({b.prefix, nf(b.cont)});
      NormalForm out;
      out.actives.push_back(std::move(a));
      return out;
    }
  }
  return {};
}

TermPtr to_term(const NormalForm& n) {
  std::vector<TermPtr> parts;
  for (auto& a : n.actives) {
    std::vector<Branch> branches;
    for (auto& b : a.branches) branches.push_back({b.prefix, to_term(b.cont)});
    parts.push_back(a.repl ? make_repl(std::move(branches)) : make_choice(std::move(branches)));
  }
  TermPtr body = make_par(std::move(parts));
  for (auto it = n.binders.rbegin(); it != n.binders.rend(); ++it)
    body = make_restrict(it->name, it->annot, body);
  return body;
}

namespace {

void collect_active_free(const Active& a, std::set<NameId>& bound, std::set<NameId>& out);

void collect_nf_free(const NormalForm& n, std::set<NameId>& bound, std::set<NameId>& out) {
  std::vector<NameId> added;
  for (auto& b : n.binders)
    if (bound.insert(b.name).second) added.push_back(b.name);
  for (auto& a : n.actives) collect_active_free(a, bound, out);
  for (NameId x : added) bound.erase(x);
}

void collect_active_free(const Active& a, std::set<NameId>& bound, std::set<NameId>& out) {
  for (auto& b : a.branches) {
    if (b.prefix.kind != PrefixKind::Tau && !bound.count(b.prefix.chan))
      out.insert(b.prefix.chan);
    if (b.prefix.kind == PrefixKind::Out && !bound.count(b.prefix.name))
      out.insert(b.prefix.name);
    if (b.prefix.kind == PrefixKind::In) {
      bool added = bound.insert(b.prefix.name).second;
      collect_nf_free(b.cont, bound, out);
      if (added) bound.erase(b.prefix.name);
    } else {
      collect_nf_free(b.cont, bound, out);
    }
  }
}

}  // namespace

std::set<NameId> free_names(const Active& a) {
  std::set<NameId> bound, out;
  collect_active_free(a, bound, out);
  return out;
}

std::set<NameId> free_names(const NormalForm& n) {
  std::set<NameId> bound, out;
  collect_nf_free(n, bound, out);
  return out;
}

NormalForm prune(const NormalForm& n) {
  NormalForm out;
  for (auto& a : n.actives) {
    Active na;
    na.repl = a.repl;
    for (auto& b : a.branches) na.branches.push_back({b.prefix, prune(b.cont)});
    out.actives.push_back(std::move(na));
  }
  std::set<NameId> used;
  for (auto& a : out.actives) {
    auto f = free_names(a);
    used.insert(f.begin(), f.end());
  }
  for (auto& b : n.binders)
    if (used.count(b.name)) out.binders.push_back(b);
  return out;
}

bool nf_equal(const NormalForm& a, const NormalForm& b) {
  if (a.binders.size() != b.binders.size() || a.actives.size() != b.actives.size())
    return false;
  for (std::size_t i = 0; i < a.binders.size(); ++i)
    if (a.binders[i].name != b.binders[i].name ||
        !type_equal(a.binders[i].annot, b.binders[i].annot))
      return false;
  for (std::size_t i = 0; i < a.actives.size(); ++i) {
    const Active& x = a.actives[i];
    const Active& y = b.actives[i];
    if (x.repl != y.repl || x.branches.size() != y.branches.size()) return false;
    for (std::size_t j = 0; j < x.branches.size(); ++j) {
      const SeqBranch& p = x.branches[j];
      const SeqBranch& q = y.branches[j];
      if (p.prefix.kind != q.prefix.kind || p.prefix.chan != q.prefix.chan ||
          p.prefix.name != q.prefix.name)
        return false;
      if (!nf_equal(p.cont, q.cont)) return false;
    }
  }
  return true;
}

NormalForm substitute_nf(const NormalForm& n, NameId from, NameId to) {
  NormalForm out;
  out.binders = n.binders;
  for ([[maybe_unused]] auto& b : out.binders) assert(b.name != from);
  for (auto& a : n.actives) {
    Active na;
    na.repl = a.repl;
    for (auto& b : a.branches) {
      SeqBranch nb;
      nb.prefix = b.prefix;
      if (nb.prefix.kind != PrefixKind::Tau && nb.prefix.chan == from)
        nb.prefix.chan = to;
      if (nb.prefix.kind == PrefixKind::Out && nb.prefix.name == from)
        nb.prefix.name = to;
      assert(!(nb.prefix.kind == PrefixKind::In && nb.prefix.name == from));
      nb.cont = substitute_nf(b.cont, from, to);
      na.branches.push_back(std::move(nb));
    }
    out.actives.push_back(std::move(na));
  }
  return out;
}

Active clone_fresh_active(Session& s, const Active& a) {
  NormalForm wrap;
  wrap.actives.push_back(a);
  auto [t, ren] = clone_fresh(s, to_term(wrap));
  (void)ren;
  NormalForm back = nf(t);
  assert(back.binders.empty() && back.actives.size() == 1);
  return back.actives[0];
}

std::vector<std::vector<bool>> linked_matrix(const NormalForm& n) {
  std::size_t m = n.actives.size();
  std::set<NameId> restricted;
  for (auto& b : n.binders) restricted.insert(b.name);
  std::vector<std::set<NameId>> fns(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (NameId x : free_names(n.actives[i]))
      if (restricted.count(x)) fns[i].insert(x);
  }
  std::vector<std::vector<bool>> out(m, std::vector<bool>(m, false));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      bool shared = false;
      for (NameId x : fns[i])
        if (fns[j].count(x)) {
          shared = true;
          break;
        }
      if (i == j || shared) out[i][j] = out[j][i] = true;
    }
  return out;
}

std::vector<std::vector<bool>> tied_matrix(const NormalForm& n) {
  auto m = linked_matrix(n);
  std::size_t k = m.size();
  for (std::size_t mid = 0; mid < k; ++mid)
    for (std::size_t i = 0; i < k; ++i)
      if (m[i][mid])
        for (std::size_t j = 0; j < k; ++j)
          if (m[mid][j]) m[i][j] = true;
  return m;
}

bool name_tied(const NormalForm& n, const std::vector<std::vector<bool>>& tied,
               NameId y, std::size_t i) {
  for (std::size_t j = 0; j < n.actives.size(); ++j) {
    if (!tied[j][i]) continue;
    if (free_names(n.actives[j]).count(y)) return true;
  }
  return false;
}

std::vector<std::size_t> migratable_indexes(NameId var, const NormalForm& cont) {
  auto tied = tied_matrix(cont);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cont.actives.size(); ++i)
    if (name_tied(cont, tied, var, i)) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// canonical form

namespace {

// Serializes one active.  Top-level binders go through `top` (assigned on
// first use when `assign` is set); all other bound names get per-active local
// numbers; free names keep their id.
struct ActiveSerializer {
  const std::set<NameId>* top_names = nullptr;
  std::map<NameId, int>* top = nullptr;
  int* next_top = nullptr;
  std::vector<NameId>* newly = nullptr;
  const std::map<NameId, TypeExprPtr>* annots = nullptr;
  bool blind = false;  // every non-local name becomes a hole (shape key)
  const std::map<NameId, NameId>* remap = nullptr;  // applied to non-local names

  std::map<NameId, int> local;
  int next_local = 0;

  std::string run(const Active& a) {
    std::string out = a.repl ? "!" : "";
    ser_branches(out, a.branches);
    return out;
  }

  void name(std::string& out, NameId x) {
    auto lit = local.find(x);
    if (lit != local.end()) {
      out += "l" + std::to_string(lit->second);
      return;
    }
    if (remap) {
      auto rit = remap->find(x);
      if (rit != remap->end()) x = rit->second;
    }
    if (blind) {
      out += "?";
      return;
    }
    if (top_names && top_names->count(x)) {
      auto it = top->find(x);
      if (it == top->end()) {
        it = top->emplace(x, (*next_top)++).first;
        if (newly) newly->push_back(x);
        out += "b" + std::to_string(it->second);
        // carry the binder annotation at the first use, so orderings that
        // differ only in binder types diverge early
        if (annots) {
          auto at = annots->find(x);
          out += "=";
          out += at == annots->end() || !at->second ? "_" : type_key(at->second);
        }
        return;
      }
      out += "b" + std::to_string(it->second);
      return;
    }
    out += "f" + std::to_string(x);
  }

  void ser_branches(std::string& out, const std::vector<SeqBranch>& bs) {
    for (std::size_t i = 0; i < bs.size(); ++i) {
      if (i) out += "+";
      const SeqBranch& b = bs[i];
      switch (b.prefix.kind) {
        case PrefixKind::Tau:
          out += "T";
          break;
        case PrefixKind::In:
          out += "I";
          name(out, b.prefix.chan);
          local.emplace(b.prefix.name, next_local++);
          break;
        case PrefixKind::Out:
          out += "O";
          name(out, b.prefix.chan);
          out += ",";
          name(out, b.prefix.name);
          break;
      }
      if (!(b.cont.binders.empty() && b.cont.actives.empty())) {
        out += ".";
        ser_nf(out, b.cont);
      }
    }
  }

  void ser_nf(std::string& out, const NormalForm& n) {
    out += "{";
    for (auto& b : n.binders) {
      local.emplace(b.name, next_local++);
      out += "v" + type_key(b.annot) + ";";
    }
    for (std::size_t i = 0; i < n.actives.size(); ++i) {
      if (i) out += "|";
      out += n.actives[i].repl ? "!" : "";
      ser_branches(out, n.actives[i].branches);
    }
    out += "}";
  }
};

std::string raw_key(const Active& a) {
  // name ids verbatim; used to spot literally identical actives
  ActiveSerializer s;
  return s.run(a);
}

// Name occurrences of non-local names in traversal order, for building the
// candidate-swap bijection.
void occurrences(const Active& a, std::vector<NameId>& out) {
  std::set<NameId> local;
  auto walk_nf = [&](auto&& self, const NormalForm& n) -> void {
    std::vector<NameId> added;
    for (auto& b : n.binders)
      if (local.insert(b.name).second) added.push_back(b.name);
    for (auto& act : n.actives)
      for (auto& br : act.branches) {
        if (br.prefix.kind != PrefixKind::Tau && !local.count(br.prefix.chan))
          out.push_back(br.prefix.chan);
        if (br.prefix.kind == PrefixKind::Out && !local.count(br.prefix.name))
          out.push_back(br.prefix.name);
        if (br.prefix.kind == PrefixKind::In) local.insert(br.prefix.name);
        self(self, br.cont);
      }
    for (NameId x : added) local.erase(x);
  };
  for (auto& br : a.branches) {
    if (br.prefix.kind != PrefixKind::Tau && !local.count(br.prefix.chan))
      out.push_back(br.prefix.chan);
    if (br.prefix.kind == PrefixKind::Out && !local.count(br.prefix.name))
      out.push_back(br.prefix.name);
    if (br.prefix.kind == PrefixKind::In) local.insert(br.prefix.name);
    walk_nf(walk_nf, br.cont);
  }
}

struct CanonSearch {
  const NormalForm* p;
  std::set<NameId> top_names;
  std::map<NameId, TypeExprPtr> annot_of;
  std::vector<std::string> raw;
  std::vector<std::vector<NameId>> occs;
  std::vector<std::set<NameId>> occ_sets;

  std::map<NameId, int> top;
  int next_top = 0;
  std::vector<char> used;
  std::string cur;
  std::optional<std::string> best;

  // True when swapping the top binders per `swap` maps the remaining multiset
  // of actives onto itself, i.e. the two candidates are interchangeable.
  bool automorphic(const std::map<NameId, NameId>& swap, std::size_t i, std::size_t j) {
    for (auto& [x, y] : swap) {
      if (x == y) continue;
      if (!top_names.count(x) || !top_names.count(y)) return false;
      if (top.count(x) || top.count(y)) return false;  // already pinned
      auto ax = annot_of.find(x);
      auto ay = annot_of.find(y);
      bool hx = ax != annot_of.end() && ax->second != nullptr;
      bool hy = ay != annot_of.end() && ay->second != nullptr;
      if (hx != hy) return false;
      if (hx && type_key(ax->second) != type_key(ay->second)) return false;
    }
    std::vector<std::string> rest_now, rest_swapped;
    for (std::size_t r = 0; r < p->actives.size(); ++r) {
      if (used[r] || r == i || r == j) continue;
      // an active untouched by the swap keeps its raw key on both sides
      bool touched = false;
      for (auto& [x, y] : swap)
        if (x != y && occ_sets[r].count(x)) {
          touched = true;
          break;
        }
      if (!touched) continue;
      rest_now.push_back(raw[r]);
      // rebuild the raw key with swapped ids; the map holds both directions
      ActiveSerializer ser;
      ser.remap = &swap;
      rest_swapped.push_back(ser.run(p->actives[r]));
    }
    std::sort(rest_now.begin(), rest_now.end());
    std::sort(rest_swapped.begin(), rest_swapped.end());
    return rest_now == rest_swapped;
  }

  void finish() {
    // binder annotations already ride along with their first use
    if (!best || cur < *best) best = cur;
  }

  void dfs(std::size_t pos) {
    if (pos == p->actives.size()) {
      finish();
      return;
    }
    std::vector<std::pair<std::string, std::size_t>> tried;
    for (std::size_t i = 0; i < p->actives.size(); ++i) {
      if (used[i]) continue;
      bool skip = false;
      for (auto& [piece, prev] : tried) {
        if (raw[prev] == raw[i]) {  // literally the same active
          skip = true;
          break;
        }
      }
      if (skip) continue;

      std::map<NameId, int> top_save = top;
      int next_save = next_top;
      std::vector<NameId> newly;
      ActiveSerializer ser;
      ser.top_names = &top_names;
      ser.top = &top;
      ser.next_top = &next_top;
      ser.newly = &newly;
      ser.annots = &annot_of;
      std::string piece = ser.run(p->actives[i]);

      bool redundant = false;
      for (auto& [prev_piece, prev] : tried) {
        if (prev_piece != piece) continue;
        // same serialized shape; skip when the two candidates are swappable
        if (occs[prev].size() == occs[i].size()) {
          std::map<NameId, NameId> swap;
          bool consistent = true;
          for (std::size_t k = 0; k < occs[i].size() && consistent; ++k) {
            NameId x = occs[prev][k], y = occs[i][k];
            auto it = swap.find(x);
            if (it != swap.end() && it->second != y) consistent = false;
            auto jt = swap.find(y);
            if (jt != swap.end() && jt->second != x) consistent = false;
            if (consistent) {
              swap[x] = y;
              swap[y] = x;
            }
          }
          if (consistent) {
            // the swap must be checked against the pre-assignment state
            std::map<NameId, int> cur_top = std::move(top);
            int cur_next = next_top;
            top = top_save;
            next_top = next_save;
            bool morph = automorphic(swap, prev, i);
            top = std::move(cur_top);
            next_top = cur_next;
            if (morph) {
              redundant = true;
              break;
            }
          }
        }
      }
      if (redundant) {
        top = std::move(top_save);
        next_top = next_save;
        continue;
      }

      std::string cur_save = cur;
      cur += piece;
      cur += "|";
      bool viable = true;
      if (best) {
        std::size_t n = std::min(cur.size(), best->size());
        int cmp = cur.compare(0, n, *best, 0, n);
        if (cmp > 0) viable = false;
      }
      if (viable) {
        used[i] = 1;
        dfs(pos + 1);
        used[i] = 0;
      }
      cur = std::move(cur_save);
      top = std::move(top_save);
      next_top = next_save;
      tried.emplace_back(std::move(piece), i);
    }
  }
};

}  // namespace

std::string active_shape(const Active& a) {
  ActiveSerializer s;
  s.blind = true;
  return s.run(a);
}

std::string canonical(const NormalForm& n0) {
  NormalForm p = prune(n0);
  if (p.is_zero()) return "0";
  CanonSearch cs;
  cs.p = &p;
  for (auto& b : p.binders) {
    cs.top_names.insert(b.name);
    cs.annot_of[b.name] = b.annot;
  }
  cs.used.assign(p.actives.size(), 0);
  cs.raw.resize(p.actives.size());
  cs.occs.resize(p.actives.size());
  cs.occ_sets.resize(p.actives.size());
  for (std::size_t i = 0; i < p.actives.size(); ++i) {
    cs.raw[i] = raw_key(p.actives[i]);
    occurrences(p.actives[i], cs.occs[i]);
    cs.occ_sets[i] = {cs.occs[i].begin(), cs.occs[i].end()};
  }
  cs.dfs(0);
  assert(cs.best);
  return *cs.best;
}

}  // namespace pihier
