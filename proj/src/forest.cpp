#include "pihier/forest.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace pihier {

namespace {

void forest_of_rec(const TermPtr& t, int parent, LabelledForest& f) {
  switch (t->kind) {
    case TermKind::Nil:
      return;
    case TermKind::Restrict: {
      ForestNode node;
      node.parent = parent;
      node.name = t->bound;
      node.annot = t->annot;
      f.nodes.push_back(std::move(node));
      forest_of_rec(t->body, static_cast<int>(f.nodes.size()) - 1, f);
      return;
    }
    case TermKind::Par:
      for (auto& p : t->parts) forest_of_rec(p, parent, f);
      return;
    case TermKind::Choice:
    case TermKind::Repl: {
      ForestNode leaf;
      leaf.parent = parent;
      leaf.seq = t;
      f.nodes.push_back(std::move(leaf));
      return;
    }
  }
}

// Rigid serialization of a sequential term with verbatim ids; leaf labels in
// forest keys compare by this.
void term_key_rec(const TermPtr& t, std::string& out) {
  switch (t->kind) {
    case TermKind::Nil:
      out += "0";
      return;
    case TermKind::Restrict:
      out += "v" + std::to_string(t->bound) + ":" + type_key(t->annot) + ".";
      term_key_rec(t->body, out);
      return;
    case TermKind::Par:
      out += "(";
      for (std::size_t i = 0; i < t->parts.size(); ++i) {
        if (i) out += "|";
        term_key_rec(t->parts[i], out);
      }
      out += ")";
      return;
    case TermKind::Choice:
    case TermKind::Repl:
      if (t->kind == TermKind::Repl) out += "!";
      for (std::size_t i = 0; i < t->branches.size(); ++i) {
        if (i) out += "+";
        const Branch& b = t->branches[i];
        switch (b.prefix.kind) {
          case PrefixKind::Tau:
            out += "T";
            break;
          case PrefixKind::In:
            out += "I" + std::to_string(b.prefix.chan) + "," +
                   std::to_string(b.prefix.name);
            break;
          case PrefixKind::Out:
            out += "O" + std::to_string(b.prefix.chan) + "," +
                   std::to_string(b.prefix.name);
            break;
        }
        out += ".";
        term_key_rec(b.cont, out);
      }
      return;
  }
}

std::string leaf_key(const TermPtr& t) {
  std::string out;
  term_key_rec(t, out);
  return out;
}

std::vector<std::vector<int>> children_of(const LabelledForest& f) {
  std::vector<std::vector<int>> ch(f.nodes.size());
  for (std::size_t i = 0; i < f.nodes.size(); ++i)
    if (f.nodes[i].parent >= 0) ch[f.nodes[i].parent].push_back(static_cast<int>(i));
  return ch;
}

}  // namespace

LabelledForest forest_of(const TermPtr& t) {
  LabelledForest f;
  forest_of_rec(t, -1, f);
  return f;
}

int restriction_height(const LabelledForest& f) {
  int best = 0;
  std::vector<int> depth(f.nodes.size(), 0);
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    assert(f.nodes[i].parent < static_cast<int>(i));
    int d = f.nodes[i].parent < 0 ? 0 : depth[f.nodes[i].parent];
    if (f.nodes[i].is_name()) ++d;
    depth[i] = d;
    best = std::max(best, d);
  }
  return best;
}

int nest_nu(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Nil:
    case TermKind::Choice:
    case TermKind::Repl:
      return 0;
    case TermKind::Restrict:
      return 1 + nest_nu(t->body);
    case TermKind::Par: {
      int best = 0;
      for (auto& p : t->parts) best = std::max(best, nest_nu(p));
      return best;
    }
  }
  return 0;
}

TermPtr term_of_forest(const LabelledForest& f) {
  auto ch = children_of(f);
  auto build = [&](auto&& self, int i) -> TermPtr {
    const ForestNode& n = f.nodes[i];
    if (!n.is_name()) {
      assert(ch[i].empty());
      return n.seq;
    }
    std::vector<TermPtr> parts;
    for (int c : ch[i]) parts.push_back(self(self, c));
    return make_restrict(n.name, n.annot, make_par(std::move(parts)));
  };
  std::vector<TermPtr> roots;
  for (std::size_t i = 0; i < f.nodes.size(); ++i)
    if (f.nodes[i].parent < 0) roots.push_back(build(build, static_cast<int>(i)));
  return make_par(std::move(roots));
}

std::string forest_key(const LabelledForest& f) {
  auto ch = children_of(f);
  auto key = [&](auto&& self, int i) -> std::string {
    const ForestNode& n = f.nodes[i];
    std::string out = n.is_name()
                          ? "N" + std::to_string(n.name) + ":" + type_key(n.annot)
                          : "S" + leaf_key(n.seq);
    std::vector<std::string> kids;
    for (int c : ch[i]) kids.push_back(self(self, c));
    std::sort(kids.begin(), kids.end());
    out += "(";
    for (auto& k : kids) out += k + ",";
    out += ")";
    return out;
  };
  std::vector<std::string> roots;
  for (std::size_t i = 0; i < f.nodes.size(); ++i)
    if (f.nodes[i].parent < 0) roots.push_back(key(key, static_cast<int>(i)));
  std::sort(roots.begin(), roots.end());
  std::string out;
  for (auto& r : roots) out += r + ";";
  return out;
}

std::string forest_to_text(const Session& s, const LabelledForest& f) {
  auto ch = children_of(f);
  std::ostringstream os;
  auto walk = [&](auto&& self, int i, int indent) -> void {
    const ForestNode& n = f.nodes[i];
    for (int k = 0; k < indent; ++k) os << "  ";
    if (n.is_name()) {
      os << s.display(n.name);
      if (n.annot) os << " : " << type_to_string(s, n.annot);
      os << "\n";
      for (int c : ch[i]) self(self, c, indent + 1);
    } else {
      os << "- " << pretty(s, n.seq) << "\n";
    }
  };
  for (std::size_t i = 0; i < f.nodes.size(); ++i)
    if (f.nodes[i].parent < 0) walk(walk, static_cast<int>(i), 0);
  return os.str();
}

std::string forest_to_dot(const Session& s, const LabelledForest& f) {
  std::ostringstream os;
  os << "digraph forest {\n  node [fontname=\"monospace\"];\n";
  auto escape = [](const std::string& v) {
    std::string out;
    for (char c : v) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  };
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    const ForestNode& n = f.nodes[i];
    if (n.is_name()) {
      std::string label = s.display(n.name);
      if (n.annot) label += " : " + type_to_string(s, n.annot);
      os << "  n" << i << " [label=\"" << escape(label) << "\"];\n";
    } else {
      os << "  n" << i << " [shape=box,label=\"" << escape(pretty(s, n.seq))
         << "\"];\n";
    }
  }
  for (std::size_t i = 0; i < f.nodes.size(); ++i)
    if (f.nodes[i].parent >= 0)
      os << "  n" << f.nodes[i].parent << " -> n" << i << ";\n";
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// enumeration of the congruence class's forests

namespace {

struct Enumerator {
  const NormalForm* n;
  std::size_t limit;
  const std::function<bool(const LabelledForest&)>* cb;

  int k = 0;                              // binder count
  std::vector<std::set<int>> leaf_needs;  // per active: binder indexes it uses
  std::vector<TermPtr> leaf_terms;
  std::vector<int> par;  // per binder: parent binder index or -1
  std::set<std::string> seen;
  std::size_t yielded = 0;
  bool stopped = false;

  bool run() {
    k = static_cast<int>(n->binders.size());
    std::map<NameId, int> index;
    for (int i = 0; i < k; ++i) index[n->binders[i].name] = i;
    for (auto& a : n->actives) {
      std::set<int> need;
      for (NameId x : free_names(a)) {
        auto it = index.find(x);
        if (it != index.end()) need.insert(it->second);
      }
      leaf_needs.push_back(std::move(need));
      NormalForm wrap;
      wrap.actives.push_back(a);
      TermPtr t = to_term(wrap);
      leaf_terms.push_back(t);
    }
    par.assign(k, -1);
    assign_names(0);
    return !stopped;
  }

  bool acyclic() const {
    for (int start = 0; start < k; ++start) {
      int cur = start, steps = 0;
      while (cur != -1) {
        cur = par[cur];
        if (++steps > k) return false;
      }
    }
    return true;
  }

  void assign_names(int j) {
    if (stopped) return;
    if (j == k) {
      if (acyclic()) place_leaves();
      return;
    }
    for (int p = -1; p < k && !stopped; ++p) {
      if (p == j) continue;
      par[j] = p;
      assign_names(j + 1);
    }
    par[j] = -1;
  }

  void place_leaves() {
    // binder index set on the root path of each binder
    std::vector<std::set<int>> path(k);
    std::vector<char> done(k, 0);
    auto fill = [&](auto&& self, int v) -> void {
      if (done[v]) return;
      if (par[v] >= 0) {
        self(self, par[v]);
        path[v] = path[par[v]];
      }
      path[v].insert(v);
      done[v] = 1;
    };
    for (int v = 0; v < k; ++v) fill(fill, v);

    std::vector<std::vector<int>> options(leaf_needs.size());
    for (std::size_t i = 0; i < leaf_needs.size(); ++i) {
      if (leaf_needs[i].empty()) options[i].push_back(-1);
      for (int v = 0; v < k; ++v) {
        bool ok = true;
        for (int need : leaf_needs[i])
          if (!path[v].count(need)) {
            ok = false;
            break;
          }
        if (ok) options[i].push_back(v);
      }
      if (options[i].empty()) return;  // this name forest admits no placement
    }

    std::vector<int> pos(leaf_needs.size(), -1);
    auto rec = [&](auto&& self, std::size_t i) -> void {
      if (stopped) return;
      if (i == leaf_needs.size()) {
        emit(pos);
        return;
      }
      for (int v : options[i]) {
        pos[i] = v;
        self(self, i + 1);
        if (stopped) return;
      }
    };
    rec(rec, 0);
  }

  void emit(const std::vector<int>& pos) {
    // nodes: binders in an order that puts parents first, then leaves
    LabelledForest f;
    std::vector<int> node_of(k, -1);
    auto add_name = [&](auto&& self, int v) -> void {
      if (node_of[v] >= 0) return;
      if (par[v] >= 0) self(self, par[v]);
      ForestNode nd;
      nd.parent = par[v] >= 0 ? node_of[par[v]] : -1;
      nd.name = n->binders[v].name;
      nd.annot = n->binders[v].annot;
      f.nodes.push_back(std::move(nd));
      node_of[v] = static_cast<int>(f.nodes.size()) - 1;
    };
    for (int v = 0; v < k; ++v) add_name(add_name, v);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      ForestNode leaf;
      leaf.parent = pos[i] >= 0 ? node_of[pos[i]] : -1;
      leaf.seq = leaf_terms[i];
      f.nodes.push_back(std::move(leaf));
    }
    if (!seen.insert(forest_key(f)).second) return;  // isomorphic duplicate
    if (++yielded > limit) {
      stopped = true;
      return;
    }
    if (!(*cb)(f)) stopped = true;
  }
};

}  // namespace

bool enumerate_congruent_forests(const NormalForm& n, std::size_t limit,
                                 const std::function<bool(const LabelledForest&)>& cb) {
  Enumerator e;
  e.n = &n;
  e.limit = limit;
  e.cb = &cb;
  return e.run();
}

// ---------------------------------------------------------------------------
// exact depth via minimum-height name forests

namespace {

// Minimum height of a forest over the vertices in which every edge of the
// graph connects an ancestor-descendant pair.  Recursion: a connected piece
// needs a root (1 + best over the rest); independent pieces sit side by side.
struct DepthSolver {
  int k = 0;
  std::vector<std::uint32_t> adj;
  std::size_t budget = 0;
  bool out_of_budget = false;
  std::unordered_map<std::uint32_t, std::pair<int, int>> memo;  // mask -> (height, root)

  std::uint32_t component(std::uint32_t mask, int start) const {
    std::uint32_t comp = 0, frontier = 1u << start;
    while (frontier) {
      comp |= frontier;
      std::uint32_t next = 0;
      for (int v = 0; v < k; ++v)
        if (frontier & (1u << v)) next |= adj[v] & mask;
      frontier = next & ~comp;
    }
    return comp;
  }

  int solve(std::uint32_t mask) {
    if (mask == 0) return 0;
    auto it = memo.find(mask);
    if (it != memo.end()) return it->second.first;
    if (budget-- == 0) {
      out_of_budget = true;
      return 0;
    }
    int first = 0;
    while (!(mask & (1u << first))) ++first;
    std::uint32_t comp = component(mask, first);
    int result;
    int choice = -1;
    if (comp != mask) {
      result = std::max(solve(comp), solve(mask & ~comp));
    } else {
      result = k + 1;
      for (int v = 0; v < k && !out_of_budget; ++v) {
        if (!(mask & (1u << v))) continue;
        int h = 1 + solve(mask & ~(1u << v));
        if (h < result) {
          result = h;
          choice = v;
        }
      }
    }
    if (!out_of_budget) memo.emplace(mask, std::make_pair(result, choice));
    return result;
  }

  // rebuilds an optimal forest from the memo table
  void build(std::uint32_t mask, int parent, const NormalForm& p,
             std::vector<int>& node_of, LabelledForest& f) {
    if (mask == 0) return;
    int first = 0;
    while (!(mask & (1u << first))) ++first;
    std::uint32_t comp = component(mask, first);
    if (comp != mask) {
      build(comp, parent, p, node_of, f);
      build(mask & ~comp, parent, p, node_of, f);
      return;
    }
    int root = memo.at(mask).second;
    assert(root >= 0);
    ForestNode nd;
    nd.parent = parent;
    nd.name = p.binders[root].name;
    nd.annot = p.binders[root].annot;
    f.nodes.push_back(std::move(nd));
    node_of[root] = static_cast<int>(f.nodes.size()) - 1;
    build(mask & ~(1u << root), node_of[root], p, node_of, f);
  }
};

}  // namespace

std::optional<DepthResult> depth_exact(const NormalForm& n, std::size_t budget) {
  NormalForm p = prune(n);
  int k = static_cast<int>(p.binders.size());
  if (k > 22) return std::nullopt;

  std::map<NameId, int> index;
  for (int i = 0; i < k; ++i) index[p.binders[i].name] = i;
  std::vector<std::set<int>> uses;
  for (auto& a : p.actives) {
    std::set<int> u;
    for (NameId x : free_names(a)) {
      auto it = index.find(x);
      if (it != index.end()) u.insert(it->second);
    }
    uses.push_back(std::move(u));
  }

  DepthSolver solver;
  solver.k = k;
  solver.budget = budget;
  solver.adj.assign(k, 0);
  for (auto& u : uses)
    for (int a : u)
      for (int b : u)
        if (a != b) solver.adj[a] |= 1u << b;

  std::uint32_t full = k == 0 ? 0 : (1u << k) - 1;
  int depth = solver.solve(full);
  if (solver.out_of_budget) return std::nullopt;

  DepthResult res;
  res.depth = depth;
  std::vector<int> node_of(k, -1);
  solver.build(full, -1, p, node_of, res.witness);
  // attach each active under its deepest required name
  std::vector<int> ndepth(res.witness.nodes.size(), 0);
  for (std::size_t i = 0; i < res.witness.nodes.size(); ++i)
    ndepth[i] = res.witness.nodes[i].parent < 0
                    ? 1
                    : ndepth[res.witness.nodes[i].parent] + 1;
  for (std::size_t i = 0; i < p.actives.size(); ++i) {
    int best = -1;
    for (int v : uses[i]) {
      int node = node_of[v];
      if (best < 0 || ndepth[node] > ndepth[best]) best = node;
    }
    ForestNode leaf;
    leaf.parent = best;
    NormalForm wrap;
    wrap.actives.push_back(p.actives[i]);
    leaf.seq = to_term(wrap);
    res.witness.nodes.push_back(std::move(leaf));
  }
  assert(restriction_height(res.witness) == depth);
  return res;
}

}  // namespace pihier
