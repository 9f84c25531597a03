#include "pihier/term.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace pihier {

TypeExprPtr make_base_type(BaseId b) {
  auto t = std::make_shared<TypeExpr>();
  t->base = b;
  return t;
}

TypeExprPtr make_chan_type(BaseId b, TypeExprPtr payload) {
  auto t = std::make_shared<TypeExpr>();
  t->base = b;
  t->payload = std::move(payload);
  return t;
}

bool type_equal(const TypeExprPtr& a, const TypeExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->base != b->base) return false;
  return type_equal(a->payload, b->payload);
}

std::string type_to_string(const Session& s, const TypeExprPtr& t) {
  if (!t) return "?";
  if (!t->payload) return s.base_display(t->base);
  return s.base_display(t->base) + "[" + type_to_string(s, t->payload) + "]";
}

std::string type_key(const TypeExprPtr& t) {
  if (!t) return "_";
  std::string out = "B" + std::to_string(t->base);
  if (t->payload) out += "[" + type_key(t->payload) + "]";
  return out;
}

TermPtr make_nil() {
  static const TermPtr nil = std::make_shared<Term>();
  return nil;
}

TermPtr make_restrict(NameId x, TypeExprPtr annot, TermPtr body) {
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Restrict;
  t->bound = x;
  t->annot = std::move(annot);
  t->body = std::move(body);
  return t;
}

TermPtr make_par(std::vector<TermPtr> parts) {
  if (parts.empty()) return make_nil();
  if (parts.size() == 1) return parts.front();
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Par;
  // keep Par flat
  for (auto& p : parts) {
    if (p->kind == TermKind::Par)
      t->parts.insert(t->parts.end(), p->parts.begin(), p->parts.end());
    else
      t->parts.push_back(std::move(p));
  }
  return t;
}

TermPtr make_choice(std::vector<Branch> branches) {
  assert(!branches.empty());
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Choice;
  t->branches = std::move(branches);
  return t;
}

TermPtr make_repl(std::vector<Branch> branches) {
  assert(!branches.empty());
  auto t = std::make_shared<Term>();
  t->kind = TermKind::Repl;
  t->branches = std::move(branches);
  return t;
}

namespace {

void collect_free(const TermPtr& t, std::set<NameId>& bound, std::set<NameId>& out) {
  switch (t->kind) {
    case TermKind::Nil:
      return;
    case TermKind::Restrict: {
      bool inserted = bound.insert(t->bound).second;
      collect_free(t->body, bound, out);
      if (inserted) bound.erase(t->bound);
      return;
    }
    case TermKind::Par:
      for (auto& p : t->parts) collect_free(p, bound, out);
      return;
    case TermKind::Choice:
    case TermKind::Repl:
      for (auto& b : t->branches) {
        if (b.prefix.kind != PrefixKind::Tau) {
          if (!bound.count(b.prefix.chan)) out.insert(b.prefix.chan);
        }
        if (b.prefix.kind == PrefixKind::Out) {
          if (!bound.count(b.prefix.name)) out.insert(b.prefix.name);
        }
        if (b.prefix.kind == PrefixKind::In) {
          bool inserted = bound.insert(b.prefix.name).second;
          collect_free(b.cont, bound, out);
          if (inserted) bound.erase(b.prefix.name);
        } else {
          collect_free(b.cont, bound, out);
        }
      }
      return;
  }
}

}  // namespace

std::set<NameId> free_names(const TermPtr& t) {
  std::set<NameId> bound, out;
  collect_free(t, bound, out);
  return out;
}

std::vector<std::pair<NameId, TypeExprPtr>> restriction_names(const TermPtr& t) {
  std::vector<std::pair<NameId, TypeExprPtr>> out;
  std::vector<TermPtr> stack{t};
  // preorder, branch continuations included
  auto walk = [&](auto&& self, const TermPtr& u) -> void {
    switch (u->kind) {
      case TermKind::Nil:
        return;
      case TermKind::Restrict:
        out.emplace_back(u->bound, u->annot);
        self(self, u->body);
        return;
      case TermKind::Par:
        for (auto& p : u->parts) self(self, p);
        return;
      case TermKind::Choice:
      case TermKind::Repl:
        for (auto& b : u->branches) self(self, b.cont);
        return;
    }
  };
  walk(walk, t);
  return out;
}

std::set<NameId> bound_names(const TermPtr& t) {
  std::set<NameId> out;
  auto walk = [&](auto&& self, const TermPtr& u) -> void {
    switch (u->kind) {
      case TermKind::Nil:
        return;
      case TermKind::Restrict:
        out.insert(u->bound);
        self(self, u->body);
        return;
      case TermKind::Par:
        for (auto& p : u->parts) self(self, p);
        return;
      case TermKind::Choice:
      case TermKind::Repl:
        for (auto& b : u->branches) {
          if (b.prefix.kind == PrefixKind::In) out.insert(b.prefix.name);
          self(self, b.cont);
        }
        return;
    }
  };
  walk(walk, t);
  return out;
}

TermPtr substitute(const TermPtr& t, const std::map<NameId, NameId>& sub) {
  if (sub.empty()) return t;
  auto map_name = [&](NameId n) {
    auto it = sub.find(n);
    return it == sub.end() ? n : it->second;
  };
  switch (t->kind) {
    case TermKind::Nil:
      return t;
    case TermKind::Restrict: {
      assert(!sub.count(t->bound));
      auto body = substitute(t->body, sub);
      if (body == t->body) return t;
      return make_restrict(t->bound, t->annot, body);
    }
    case TermKind::Par: {
      std::vector<TermPtr> parts;
      bool changed = false;
      for (auto& p : t->parts) {
        parts.push_back(substitute(p, sub));
        changed |= parts.back() != p;
      }
      return changed ? make_par(std::move(parts)) : t;
    }
    case TermKind::Choice:
    case TermKind::Repl: {
      std::vector<Branch> branches;
      bool changed = false;
      for (auto& b : t->branches) {
        Branch nb = b;
        if (nb.prefix.kind != PrefixKind::Tau) nb.prefix.chan = map_name(nb.prefix.chan);
        if (nb.prefix.kind == PrefixKind::Out) nb.prefix.name = map_name(nb.prefix.name);
        if (nb.prefix.kind == PrefixKind::In) assert(!sub.count(nb.prefix.name));
        nb.cont = substitute(b.cont, sub);
        changed |= nb.cont != b.cont || nb.prefix.chan != b.prefix.chan ||
                   nb.prefix.name != b.prefix.name;
        branches.push_back(std::move(nb));
      }
      if (!changed) return t;
      return t->kind == TermKind::Choice ? make_choice(std::move(branches))
                                         : make_repl(std::move(branches));
    }
  }
  return t;
}

TermPtr substitute(const TermPtr& t, NameId from, NameId to) {
  if (from == to) return t;
  return substitute(t, std::map<NameId, NameId>{{from, to}});
}

namespace {

TermPtr clone_fresh_rec(Session& s, const TermPtr& t, std::map<NameId, NameId>& ren) {
  auto map_name = [&](NameId n) {
    auto it = ren.find(n);
    return it == ren.end() ? n : it->second;
  };
  switch (t->kind) {
    case TermKind::Nil:
      return t;
    case TermKind::Restrict: {
      NameId nx = s.fresh_name(s.display(t->bound));
      ren[t->bound] = nx;
      return make_restrict(nx, t->annot, clone_fresh_rec(s, t->body, ren));
    }
    case TermKind::Par: {
      std::vector<TermPtr> parts;
      for (auto& p : t->parts) parts.push_back(clone_fresh_rec(s, p, ren));
      return make_par(std::move(parts));
    }
    case TermKind::Choice:
    case TermKind::Repl: {
      std::vector<Branch> branches;
      for (auto& b : t->branches) {
        Branch nb;
        nb.prefix = b.prefix;
        if (nb.prefix.kind == PrefixKind::In) {
          NameId nv = s.fresh_name(s.display(nb.prefix.name));
          ren[nb.prefix.name] = nv;
          nb.prefix.chan = map_name(b.prefix.chan);
          nb.prefix.name = nv;
        } else if (nb.prefix.kind == PrefixKind::Out) {
          nb.prefix.chan = map_name(b.prefix.chan);
          nb.prefix.name = map_name(b.prefix.name);
        }
        nb.cont = clone_fresh_rec(s, b.cont, ren);
        branches.push_back(std::move(nb));
      }
      return t->kind == TermKind::Choice ? make_choice(std::move(branches))
                                         : make_repl(std::move(branches));
    }
  }
  return t;
}

}  // namespace

std::pair<TermPtr, std::map<NameId, NameId>> clone_fresh(Session& s, const TermPtr& t) {
  std::map<NameId, NameId> ren;
  TermPtr out = clone_fresh_rec(s, t, ren);
  return {out, ren};
}

namespace {

bool alpha_rec(const TermPtr& a, const TermPtr& b, std::map<NameId, NameId>& ab) {
  if (a->kind != b->kind) return false;
  auto names_match = [&](NameId x, NameId y) {
    auto it = ab.find(x);
    if (it != ab.end()) return it->second == y;
    return x == y;  // both free (or bound outside both terms)
  };
  switch (a->kind) {
    case TermKind::Nil:
      return true;
    case TermKind::Restrict: {
      if (!type_equal(a->annot, b->annot)) return false;
      auto saved = ab;
      ab[a->bound] = b->bound;
      bool ok = alpha_rec(a->body, b->body, ab);
      ab = saved;
      return ok;
    }
    case TermKind::Par: {
      if (a->parts.size() != b->parts.size()) return false;
      for (std::size_t i = 0; i < a->parts.size(); ++i)
        if (!alpha_rec(a->parts[i], b->parts[i], ab)) return false;
      return true;
    }
    case TermKind::Choice:
    case TermKind::Repl: {
      if (a->branches.size() != b->branches.size()) return false;
      for (std::size_t i = 0; i < a->branches.size(); ++i) {
        const Branch& x = a->branches[i];
        const Branch& y = b->branches[i];
        if (x.prefix.kind != y.prefix.kind) return false;
        if (x.prefix.kind != PrefixKind::Tau &&
            !names_match(x.prefix.chan, y.prefix.chan))
          return false;
        if (x.prefix.kind == PrefixKind::Out &&
            !names_match(x.prefix.name, y.prefix.name))
          return false;
        if (x.prefix.kind == PrefixKind::In) {
          auto saved = ab;
          ab[x.prefix.name] = y.prefix.name;
          bool ok = alpha_rec(x.cont, y.cont, ab);
          ab = saved;
          if (!ok) return false;
        } else {
          if (!alpha_rec(x.cont, y.cont, ab)) return false;
        }
      }
      return true;
    }
  }
  return false;
}

}  // namespace

bool alpha_equal(const TermPtr& a, const TermPtr& b) {
  std::map<NameId, NameId> ab;
  return alpha_rec(a, b, ab);
}

TermPtr erase_annotations(const TermPtr& t) {
  switch (t->kind) {
    case TermKind::Nil:
      return t;
    case TermKind::Restrict: {
      auto body = erase_annotations(t->body);
      if (!t->annot && body == t->body) return t;
      return make_restrict(t->bound, nullptr, body);
    }
    case TermKind::Par: {
      std::vector<TermPtr> parts;
      bool changed = false;
      for (auto& p : t->parts) {
        parts.push_back(erase_annotations(p));
        changed |= parts.back() != p;
      }
      return changed ? make_par(std::move(parts)) : t;
    }
    case TermKind::Choice:
    case TermKind::Repl: {
      std::vector<Branch> branches;
      bool changed = false;
      for (auto& b : t->branches) {
        Branch nb = b;
        nb.cont = erase_annotations(b.cont);
        changed |= nb.cont != b.cont;
        branches.push_back(std::move(nb));
      }
      if (!changed) return t;
      return t->kind == TermKind::Choice ? make_choice(std::move(branches))
                                         : make_repl(std::move(branches));
    }
  }
  return t;
}

TermPtr annotate(const TermPtr& t, const std::map<NameId, TypeExprPtr>& by_name) {
  switch (t->kind) {
    case TermKind::Nil:
      return t;
    case TermKind::Restrict: {
      auto it = by_name.find(t->bound);
      TypeExprPtr annot = it == by_name.end() ? t->annot : it->second;
      return make_restrict(t->bound, annot, annotate(t->body, by_name));
    }
    case TermKind::Par: {
      std::vector<TermPtr> parts;
      for (auto& p : t->parts) parts.push_back(annotate(p, by_name));
      return make_par(std::move(parts));
    }
    case TermKind::Choice:
    case TermKind::Repl: {
      std::vector<Branch> branches;
      for (auto& b : t->branches) {
        Branch nb = b;
        nb.cont = annotate(b.cont, by_name);
        branches.push_back(std::move(nb));
      }
      return t->kind == TermKind::Choice ? make_choice(std::move(branches))
                                         : make_repl(std::move(branches));
    }
  }
  return t;
}

std::string prefix_to_string(const Session& s, const Prefix& p) {
  std::ostringstream os;
  switch (p.kind) {
    case PrefixKind::Tau:
      os << "tau";
      break;
    case PrefixKind::In:
      os << s.display(p.chan) << "(" << s.display(p.name) << ")";
      break;
    case PrefixKind::Out:
      os << s.display(p.chan) << "<" << s.display(p.name) << ">";
      break;
  }
  return os.str();
}

}  // namespace pihier
