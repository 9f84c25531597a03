#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <climits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pihier/forest.hpp"
#include "pihier/normal.hpp"
#include "pihier/term.hpp"

using namespace pihier;

namespace {

// One active whose free names are exactly `names`.
Active send_active(const std::vector<NameId>& names) {
  Active a;
  for (NameId x : names) {
    SeqBranch b;
    b.prefix = {PrefixKind::Out, x, x};
    a.branches.push_back(std::move(b));
  }
  return a;
}

// Brute-force minimum restriction height: try every parent assignment over
// the pruned binders and keep those where each active's binders are pairwise
// ancestor-related (then they sit on one root path and the active can hang
// under the deepest of them).
int depth_oracle(const NormalForm& n) {
  NormalForm p = prune(n);
  int k = static_cast<int>(p.binders.size());
  if (k == 0) return 0;
  std::map<NameId, int> index;
  for (int i = 0; i < k; ++i) index[p.binders[i].name] = i;
  std::vector<std::vector<int>> uses;
  for (auto& a : p.actives) {
    std::vector<int> u;
    for (NameId x : free_names(a)) {
      auto it = index.find(x);
      if (it != index.end()) u.push_back(it->second);
    }
    uses.push_back(std::move(u));
  }

  std::vector<int> par(k, -1);
  int best = INT_MAX;
  auto ancestor = [&](int a, int b) {  // a strictly above b
    for (int cur = par[b]; cur != -1; cur = par[cur])
      if (cur == a) return true;
    return false;
  };
  auto rec = [&](auto&& self, int j) -> void {
    if (j < k) {
      for (int v = -1; v < k; ++v) {
        if (v == j) continue;
        par[j] = v;
        self(self, j + 1);
      }
      par[j] = -1;
      return;
    }
    for (int v = 0; v < k; ++v) {  // cycles make the upward walk loop
      int cur = v, steps = 0;
      while (cur != -1) {
        cur = par[cur];
        if (++steps > k) return;
      }
    }
    for (auto& u : uses)
      for (std::size_t a = 0; a < u.size(); ++a)
        for (std::size_t b = a + 1; b < u.size(); ++b)
          if (!ancestor(u[a], u[b]) && !ancestor(u[b], u[a])) return;
    int height = 0;
    for (int v = 0; v < k; ++v) {
      int d = 0;
      for (int cur = v; cur != -1; cur = par[cur]) ++d;
      height = std::max(height, d);
    }
    best = std::min(best, height);
  };
  rec(rec, 0);
  return best;
}

NormalForm random_nf(Session& s, std::mt19937& rng, int max_binders, int max_actives) {
  NormalForm n;
  int k = static_cast<int>(rng() % (max_binders + 1));
  for (int i = 0; i < k; ++i) n.binders.push_back({s.fresh_name("r"), nullptr});
  NameId f1 = s.intern_free("f1"), f2 = s.intern_free("f2");
  int m = 1 + static_cast<int>(rng() % max_actives);
  for (int i = 0; i < m; ++i) {
    std::vector<NameId> names;
    for (auto& b : n.binders)
      if (rng() % 2) names.push_back(b.name);
    if (names.empty() || rng() % 4 == 0) names.push_back(rng() % 2 ? f1 : f2);
    n.actives.push_back(send_active(names));
  }
  return n;
}

}  // namespace

TEST_CASE("syntactic forest mirrors the restriction structure") {
  Session s;
  TermPtr t = parse_term(s, "new a. new b. new c. (a(x).0 | b<c>.0 | c(y).0)");
  LabelledForest f = forest_of(t);
  REQUIRE(f.nodes.size() == 6);
  CHECK(s.display(f.nodes[0].name) == "a");
  CHECK(f.nodes[0].parent == -1);
  CHECK(s.display(f.nodes[1].name) == "b");
  CHECK(f.nodes[1].parent == 0);
  CHECK(s.display(f.nodes[2].name) == "c");
  CHECK(f.nodes[2].parent == 1);
  for (int i = 3; i < 6; ++i) {
    CHECK(!f.nodes[i].is_name());
    CHECK(f.nodes[i].parent == 2);
  }
  CHECK(restriction_height(f) == 3);

  // sequential subterms close off the forest: a restriction under a prefix
  // contributes nothing
  LabelledForest g = forest_of(parse_term(s, "a(x).new y. y<x>.0"));
  REQUIRE(g.nodes.size() == 1);
  CHECK(!g.nodes[0].is_name());
  CHECK(restriction_height(g) == 0);
}

TEST_CASE("nest equals the height of the syntactic forest") {
  Session s;
  const char* samples[] = {
      "new a. new b. new c. (a(x).0 | b<c>.0 | c(y).0)",
      "new a. a<b>.0 | new c. new d. c<d>.0",
      "a(x).new y. y<x>.0",
      "0",
      "new a. (new b. b<a>.0 | new c. 0)",
      "!p(t).(t?().p<t>.0 + q!().0)",
  };
  for (const char* src : samples) {
    CAPTURE(src);
    TermPtr t = parse_term(s, src);
    CHECK(nest_nu(t) == restriction_height(forest_of(t)));
  }
  CHECK(nest_nu(parse_term(s, "(new a. a<b>.0) | new c. new d. c<d>.0")) == 2);
  CHECK(nest_nu(parse_term(s, "0")) == 0);
}

TEST_CASE("term_of_forest rebuilds a congruent spelling") {
  Session s;
  const char* samples[] = {
      "new a. new b. new c. (a(x).0 | b<c>.0 | c(y).0)",
      "new a. (a<a>.0 | new b. (b<a>.0 | b(x).0)) | c<c>.0",
      "new a. 0",
  };
  for (const char* src : samples) {
    CAPTURE(src);
    TermPtr t = parse_term(s, src);
    LabelledForest f = forest_of(t);
    TermPtr back = term_of_forest(f);
    CHECK(forest_key(forest_of(back)) == forest_key(f));
    CHECK(canonical(nf(back)) == canonical(nf(t)));
  }
}

TEST_CASE("forest keys ignore sibling order and node numbering") {
  Session s;
  TermPtr t1 = parse_term(s, "new a. (a<a>.0 | b<b>.0)");
  TermPtr t2 = parse_term(s, "new a. (b<b>.0 | a<a>.0)");
  // t2's names are fresh; rebuild t1's spelling with its own ids reordered
  LabelledForest f1 = forest_of(t1);
  std::swap(f1.nodes[1], f1.nodes[2]);
  CHECK(forest_key(f1) == forest_key(forest_of(t1)));
  CHECK(forest_key(forest_of(t1)) != forest_key(forest_of(t2)));  // ids differ
}

TEST_CASE("a nested spelling can be shallower than the original") {
  Session s;
  TermPtr p = parse_term(s, "new a. new b. new c. (a(x).0 | b<c>.0 | c(y).0)");
  TermPtr q = parse_term(s, "(new a. a(x).0) | new c. (c(y).0 | new b. b<c>.0)");
  CHECK(nest_nu(p) == 3);
  CHECK(nest_nu(q) == 2);

  NormalForm n = nf(p);
  auto d = depth_exact(n);
  REQUIRE(d.has_value());
  CHECK(d->depth == 2);
  CHECK(restriction_height(d->witness) == 2);
  CHECK(nest_nu(term_of_forest(d->witness)) == 2);
  CHECK(canonical(nf(term_of_forest(d->witness))) == canonical(n));
}

TEST_CASE("zero admits exactly the empty forest") {
  Session s;
  NormalForm n = nf(parse_term(s, "0"));
  std::vector<LabelledForest> got;
  bool complete = enumerate_congruent_forests(n, 100, [&](const LabelledForest& f) {
    got.push_back(f);
    return true;
  });
  CHECK(complete);
  REQUIRE(got.size() == 1);
  CHECK(got[0].empty());
}

TEST_CASE("enumerated forests satisfy the shape conditions") {
  Session s;
  TermPtr t = parse_term(s, "new a. new b. (a<b>.0 | a(x).0 | c<c>.0)");
  NormalForm n = nf(t);
  std::set<NameId> binders;
  for (auto& b : n.binders) binders.insert(b.name);

  std::size_t count = 0;
  bool complete = enumerate_congruent_forests(n, 10000, [&](const LabelledForest& f) {
    ++count;
    std::map<NameId, int> seen;
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
      const ForestNode& nd = f.nodes[i];
      CHECK(nd.parent < static_cast<int>(i));
      if (nd.is_name()) {
        CHECK(binders.count(nd.name) == 1);
        ++seen[nd.name];
      } else {
        // leaves are childless and see their restricted free names above them
        for (auto& other : f.nodes)
          CHECK(other.parent != static_cast<int>(i));
        std::set<NameId> path;
        for (int cur = nd.parent; cur != -1; cur = f.nodes[cur].parent)
          path.insert(f.nodes[cur].name);
        for (NameId x : free_names(nd.seq))
          if (binders.count(x)) CHECK(path.count(x) == 1);
      }
    }
    for (NameId b : binders) CHECK(seen[b] == 1);
    CHECK(canonical(nf(term_of_forest(f))) == canonical(n));
    return true;
  });
  CHECK(complete);
  CHECK(count > 1);

  // a tiny limit stops the walk early and reports it
  CHECK(!enumerate_congruent_forests(n, 1, [](const LabelledForest&) { return true; }));
  // so does the callback
  CHECK(!enumerate_congruent_forests(n, 10000, [](const LabelledForest&) { return false; }));
}

TEST_CASE("exact depth matches brute force over name forests") {
  Session s;
  std::mt19937 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    CAPTURE(trial);
    NormalForm n = random_nf(s, rng, 4, 5);
    auto d = depth_exact(n);
    REQUIRE(d.has_value());
    CHECK(d->depth == depth_oracle(n));
    CHECK(restriction_height(d->witness) == d->depth);
    CHECK(canonical(nf(term_of_forest(d->witness))) == canonical(n));
  }
}

TEST_CASE("exact depth is the minimum over the enumeration") {
  Session s;
  std::mt19937 rng(7);
  for (int trial = 0; trial < 80; ++trial) {
    CAPTURE(trial);
    NormalForm n = random_nf(s, rng, 3, 4);
    int best = INT_MAX;
    bool complete = enumerate_congruent_forests(prune(n), 1u << 20, [&](const LabelledForest& f) {
      best = std::min(best, restriction_height(f));
      return true;
    });
    REQUIRE(complete);
    auto d = depth_exact(n);
    REQUIRE(d.has_value());
    CHECK(d->depth == best);
  }
}

TEST_CASE("depth search respects its budget and binder cap") {
  Session s;
  TermPtr t = parse_term(s, "new a. new b. new c. (a<b>.0 | b<c>.0 | c<a>.0)");
  CHECK(!depth_exact(nf(t), 1).has_value());
  CHECK(depth_exact(nf(t)).has_value());

  NormalForm wide;
  std::vector<NameId> names;
  for (int i = 0; i < 23; ++i) {
    NameId x = s.fresh_name("w");
    wide.binders.push_back({x, nullptr});
    names.push_back(x);
  }
  wide.actives.push_back(send_active(names));
  CHECK(!depth_exact(wide).has_value());
}

TEST_CASE("dead binders do not count toward depth") {
  Session s;
  TermPtr t = parse_term(s, "new a. new dead. (a(x).0 | b<b>.0)");
  auto d = depth_exact(nf(t));
  REQUIRE(d.has_value());
  CHECK(d->depth == 1);
  for (auto& nd : d->witness.nodes)
    if (nd.is_name()) CHECK(s.display(nd.name) == "a");
}

TEST_CASE("text and dot renderings show the structure") {
  Session s;
  TermPtr t = parse_term(s, "new a: srv. (a<a>.0 | new b. b(x).0)");
  LabelledForest f = forest_of(t);
  std::string text = forest_to_text(s, f);
  CHECK(text.find("a : srv") != std::string::npos);
  CHECK(text.find("  b") != std::string::npos);
  std::string dot = forest_to_dot(s, f);
  CHECK(dot.find("digraph") != std::string::npos);
  CHECK(dot.find("->") != std::string::npos);
  CHECK(dot.find("shape=box") != std::string::npos);
}
