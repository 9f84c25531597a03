#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <string>

#include "pihier/typing.hpp"

using namespace pihier;

namespace {

bool has_rule(const TypingReport& r, const std::string& rule) {
  for (auto& v : r.violations)
    if (v.rule == rule) return true;
  return false;
}

const char* client_server_src =
    "new s: s[m[d]]. new c: c[m[d]]. ("
    "  (!s(x).new d: d. x<d>.0)"
    "  | (!c(m).(s<m>.0 | m(y).c<m>.0))"
    "  | (!tau.new m: m[d]. c<m>.0)"
    ")";

}  // namespace

TEST_CASE("nil typechecks under an empty environment") {
  Session s;
  Hierarchy h;
  TypingReport r = typecheck_term(s, h, {}, parse_term(s, "0"));
  CHECK(r.ok);
  CHECK(r.violations.empty());
  CHECK(report_to_text(s, r) == "ok\n");
  CHECK(typecheck_term(s, h, {}, parse_term(s, "tau.0")).ok);
}

TEST_CASE("client server system typechecks under its chain") {
  Session s;
  Hierarchy h = parse_hierarchy(s, "s < c < m < d");
  TypingReport r = typecheck_term(s, h, {}, parse_term(s, client_server_src));
  CHECK(r.ok);
  CHECK(r.violations.empty());
}

TEST_CASE("out requires the channel to carry exactly the message type") {
  Session s;
  Hierarchy h = parse_hierarchy(s, "ta\nm");
  TypeEnv env = parse_env(s, "a : ta[m[m]], b : m");
  TypingReport r = typecheck_term(s, h, env, parse_term(s, "a<b>.0"));
  CHECK(!r.ok);
  CHECK(has_rule(r, "out"));

  TypeEnv good = parse_env(s, "a2 : ta[m], b2 : m");
  CHECK(typecheck_term(s, h, good, parse_term(s, "a2<b2>.0")).ok);

  // a name with a bare base type cannot act as a channel
  TypeEnv bare = parse_env(s, "c : m, e : m");
  TypingReport r2 = typecheck_term(s, h, bare, parse_term(s, "c<e>.0"));
  CHECK(!r2.ok);
  CHECK(r2.violations[0].constraint.find("channel") != std::string::npos);
}

TEST_CASE("in lets a received name move only below the channel base") {
  Session s;
  TypeEnv env = parse_env(s, "a : ta[tm], o : to[tm]");
  TermPtr t = parse_term(s, "a(x).o<x>.0");

  // o reaches the migratable continuation but sits above a
  Hierarchy up = parse_hierarchy(s, "ta < to\ntm");
  TypingReport bad = typecheck_term(s, up, env, t);
  CHECK(!bad.ok);
  CHECK(has_rule(bad, "in"));

  // o below a satisfies the escape condition
  Hierarchy down = parse_hierarchy(s, "to < ta\ntm");
  CHECK(typecheck_term(s, down, env, t).ok);

  // the received name staying below a works regardless of o
  Hierarchy low = parse_hierarchy(s, "tm < ta\nto");
  CHECK(typecheck_term(s, low, env, t).ok);

  // nothing migrates when the received name is never mentioned
  TermPtr t2 = parse_term(s, "a(x).o(w).0");
  CHECK(typecheck_term(s, up, env, t2).ok);
}

TEST_CASE("a ring growing on its own channel base is rejected") {
  Session s;
  Hierarchy h = parse_hierarchy(s, "tm < ts < tz");
  TermPtr r = parse_term(
      s,
      "new m: tm[ts[tz]]. new s0: ts[tz]. ("
      "  (!m(n).s0?().new sx: ts[tz]. ((!sx?().n!().0) | m<sx>.0 | sx!().0))"
      "  | m<s0>.0"
      "  | s0!().0)");
  // the nullary sends hoist unannotated dummies; give them the payload base
  std::map<NameId, TypeExprPtr> fill;
  for (auto& [x, annot] : restriction_names(r))
    if (!annot) fill[x] = make_base_type(s.intern_base("tz"));
  r = annotate(r, fill);

  TypingReport rep = typecheck_term(s, h, {}, r);
  CHECK(!rep.ok);
  REQUIRE(rep.violations.size() == 2);
  // the next-node address has the same base as the fresh node, so the
  // strict ordering demanded for the tied restriction cannot hold
  bool same_base_pair = false;
  for (auto& v : rep.violations)
    if (v.rule == "par" && v.bases.size() == 2 && v.bases[0] == v.bases[1] &&
        s.base_display(v.bases[0]) == "ts")
      same_base_pair = true;
  CHECK(same_base_pair);
  CHECK(has_rule(rep, "in"));

  std::string json = report_to_json(s, rep);
  CHECK(json.find("\"rule\"") != std::string::npos);
  CHECK(json.find("\"bases\"") != std::string::npos);
  CHECK(report_to_text(s, rep).find("2 violations") != std::string::npos);
}

TEST_CASE("symmetric forwarders fail under every hierarchy over their bases") {
  Session s;
  TypeEnv env = parse_env(s, "p : ta[ta], q : tb[tb]");
  TermPtr t = parse_term(
      s,
      "(!tau.new a: ta. p<a>.0)"
      " | (!tau.new b: tb. q<b>.0)"
      " | (!(p(x).(!(q(y).x<y>.0)) + q(x2).(!(p(y2).x2<y2>.0))))");
  for (const char* decl : {"ta\ntb", "ta < tb", "tb < ta"}) {
    CAPTURE(decl);
    Hierarchy h = parse_hierarchy(s, decl);
    CHECK(!typecheck_term(s, h, env, t).ok);
  }
}

TEST_CASE("missing environment entries and annotations are reported not thrown") {
  Session s;
  Hierarchy h;
  TypingReport r = typecheck_term(s, h, {}, parse_term(s, "a<b>.0"));
  CHECK(!r.ok);
  CHECK(has_rule(r, "env"));
  CHECK(has_rule(r, "out"));

  TypingReport r2 = typecheck_term(s, h, {}, parse_term(s, "new x. tau.0"));
  CHECK(!r2.ok);
  REQUIRE(!r2.violations.empty());
  CHECK(r2.violations[0].rule == "par");
  CHECK(r2.violations[0].constraint.find("annotation") != std::string::npos);
}

TEST_CASE("extra assignments for unused names do not flip the verdict") {
  Session s;
  Hierarchy h = parse_hierarchy(s, "s < c < m < d");
  TermPtr t = parse_term(s, client_server_src);
  CHECK(typecheck_term(s, h, {}, t).ok);
  TypeEnv wider = parse_env(s, "zz : d");
  CHECK(typecheck_term(s, h, wider, t).ok);
}

TEST_CASE("the verdict is stable across reshuffled presentations") {
  Session s;
  Hierarchy h = parse_hierarchy(s, "s < c < m < d");
  const char* shuffled =
      "new c: c[m[d]]. new s: s[m[d]]. ("
      "  (!tau.new m: m[d]. c<m>.0)"
      "  | (!c(m).(s<m>.0 | m(y).c<m>.0))"
      "  | (!s(x).new d: d. x<d>.0)"
      ")";
  TermPtr t1 = parse_term(s, client_server_src);
  TermPtr t2 = parse_term(s, shuffled);
  CHECK(canonical(nf(t1)) == canonical(nf(t2)));
  CHECK(typecheck_term(s, h, {}, t1).ok == typecheck_term(s, h, {}, t2).ok);
}

TEST_CASE("renaming onto an equally typed name preserves typability") {
  Session s;
  Hierarchy h = parse_hierarchy(s, "t\nm");
  TypeEnv env = parse_env(s, "a : t[m], b : t[m], c : m");
  TermPtr t = parse_term(s, "a<c>.b<c>.0");
  CHECK(typecheck_term(s, h, env, t).ok);
  NameId ida = s.intern_free("a"), idb = s.intern_free("b");
  CHECK(typecheck_term(s, h, env, substitute(t, ida, idb)).ok);
}
