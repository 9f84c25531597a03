#include "pihier/typing.hpp"

#include <json.hpp>

#include <cstddef>
#include <utility>

namespace pihier {

namespace {

struct Checker {
  const Session* s = nullptr;
  const Hierarchy* h = nullptr;
  TypingReport report;
  std::vector<std::string> path;

  std::string where() const {
    if (path.empty()) return "top";
    std::string out;
    for (auto& seg : path) {
      if (!out.empty()) out += " / ";
      out += seg;
    }
    return out;
  }

  void violate(std::string rule, std::string constraint,
               std::vector<BaseId> bases = {}) {
    report.ok = false;
    report.violations.push_back(
        {std::move(rule), where(), std::move(constraint), std::move(bases)});
  }

  const TypeExprPtr* lookup(const TypeEnv& env, NameId x) const {
    auto it = env.find(x);
    return it == env.end() ? nullptr : &it->second;
  }

  // new X. prod A_i: every A_i must type under the environment extended with
  // X, and every outer name an active mentions must sit strictly below every
  // binder of X tied to that active.
  void check_nf(const TypeEnv& outer, const NormalForm& n) {
    TypeEnv inner = outer;
    for (auto& b : n.binders) {
      if (!b.annot) {
        violate("par",
                "restriction " + s->display(b.name) + " has no type annotation");
        continue;
      }
      inner[b.name] = b.annot;
    }
    auto tied = tied_matrix(n);
    for (std::size_t i = 0; i < n.actives.size(); ++i) {
      path.push_back((n.actives[i].repl ? "!A" : "A") + std::to_string(i));
      for (auto& b : n.binders) {
        if (!b.annot || !name_tied(n, tied, b.name, i)) continue;
        for (NameId y : free_names(n.actives[i])) {
          const TypeExprPtr* ty = lookup(outer, y);
          if (!ty || h->lt((*ty)->base, b.annot->base)) continue;
          violate("par",
                  "base " + s->base_display((*ty)->base) + " of " +
                      s->display(y) + " is not below base " +
                      s->base_display(b.annot->base) +
                      " of the tied restriction " + s->display(b.name),
                  {(*ty)->base, b.annot->base});
        }
      }
      check_active(inner, n.actives[i]);
      path.pop_back();
    }
  }

  // Repl checks its body, Choice every branch, both under the same env.
  void check_active(const TypeEnv& env, const Active& a) {
    for (auto& br : a.branches) {
      path.push_back(prefix_to_string(*s, br.prefix));
      check_branch(env, br);
      path.pop_back();
    }
  }

  void check_branch(const TypeEnv& env, const SeqBranch& br) {
    switch (br.prefix.kind) {
      case PrefixKind::Tau:
        check_nf(env, br.cont);
        break;
      case PrefixKind::Out:
        check_out(env, br);
        break;
      case PrefixKind::In:
        check_in(env, br);
        break;
    }
  }

  // a<b>.Q: a must carry exactly the type of b.
  void check_out(const TypeEnv& env, const SeqBranch& br) {
    NameId a = br.prefix.chan, b = br.prefix.name;
    const TypeExprPtr* ta = lookup(env, a);
    const TypeExprPtr* tb = lookup(env, b);
    if (!ta) {
      violate("out", "channel " + s->display(a) + " has no type in scope");
    } else if (!(*ta)->payload) {
      violate("out",
              "name " + s->display(a) +
                  " has a base type and cannot be used as a channel",
              {(*ta)->base});
    }
    if (!tb) {
      violate("out", "message " + s->display(b) + " has no type in scope");
    } else if (ta && (*ta)->payload && !type_equal((*ta)->payload, *tb)) {
      violate("out",
              "channel " + s->display(a) + " carries " +
                  type_to_string(*s, (*ta)->payload) + " but message " +
                  s->display(b) + " has type " + type_to_string(*s, *tb),
              {(*ta)->payload->base, (*tb)->base});
    }
    check_nf(env, br.cont);
  }

  // a(x).new X. prod A_i: the continuation types with x at the carried type,
  // and either the received name's base stays below a's base, or every
  // active the received name could migrate into mentions only outer names
  // strictly below a's base.
  void check_in(const TypeEnv& env, const SeqBranch& br) {
    NameId a = br.prefix.chan, x = br.prefix.name;
    const TypeExprPtr* ta = lookup(env, a);
    if (!ta) {
      violate("in", "channel " + s->display(a) + " has no type in scope");
      check_nf(env, br.cont);
      return;
    }
    if (!(*ta)->payload) {
      violate("in",
              "name " + s->display(a) +
                  " has a base type and cannot be used as a channel",
              {(*ta)->base});
      check_nf(env, br.cont);
      return;
    }
    const TypeExprPtr& tx = (*ta)->payload;
    BaseId base_a = (*ta)->base;

    TypeEnv extended = env;
    extended[x] = tx;
    check_nf(extended, br.cont);

    if (h->lt(tx->base, base_a)) return;
    for (std::size_t i : migratable_indexes(x, br.cont)) {
      for (NameId y : free_names(br.cont.actives[i])) {
        if (y == a) continue;
        const TypeExprPtr* ty = lookup(env, y);
        if (!ty || h->lt((*ty)->base, base_a)) continue;
        violate("in",
                "received name " + s->display(x) + " of base " +
                    s->base_display(tx->base) + " may escape: " +
                    s->display(y) + " of base " + s->base_display((*ty)->base) +
                    " reaches a migratable continuation of " + s->display(a) +
                    " but is not below its base " + s->base_display(base_a),
                {(*ty)->base, base_a});
      }
    }
  }
};

}  // namespace

TypingReport typecheck(const Session& s, const Hierarchy& h, const TypeEnv& env,
                       const NormalForm& n) {
  Checker c;
  c.s = &s;
  c.h = &h;
  for (NameId x : free_names(n))
    if (!env.count(x))
      c.violate("env",
                "free name " + s.display(x) + " is missing from the environment");
  c.check_nf(env, n);
  return std::move(c.report);
}

TypingReport typecheck_term(const Session& s, const Hierarchy& h,
                            const TypeEnv& env, const TermPtr& t) {
  return typecheck(s, h, env, nf(t));
}

std::string report_to_text(const Session& s, const TypingReport& r) {
  if (r.ok) return "ok\n";
  std::string out = std::to_string(r.violations.size()) + " violation" +
                    (r.violations.size() == 1 ? "" : "s") + "\n";
  for (auto& v : r.violations) {
    out += v.rule + " at " + v.where + ": " + v.constraint;
    if (!v.bases.empty()) {
      out += " [";
      for (std::size_t i = 0; i < v.bases.size(); ++i) {
        if (i) out += ", ";
        out += s.base_display(v.bases[i]);
      }
      out += "]";
    }
    out += "\n";
  }
  return out;
}

std::string report_to_json(const Session& s, const TypingReport& r) {
  nlohmann::json j;
  j["ok"] = r.ok;
  j["violations"] = nlohmann::json::array();
  for (auto& v : r.violations) {
    nlohmann::json e;
    e["rule"] = v.rule;
    e["where"] = v.where;
    e["constraint"] = v.constraint;
    e["bases"] = nlohmann::json::array();
    for (BaseId b : v.bases) e["bases"].push_back(s.base_display(b));
    j["violations"].push_back(std::move(e));
  }
  return j.dump(2);
}

}  // namespace pihier
