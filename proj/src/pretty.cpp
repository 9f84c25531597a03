#include <map>
#include <set>
#include <sstream>

#include "pihier/term.hpp"

namespace pihier {

namespace {

bool valid_ident(const std::string& d) {
  if (d.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(d[0])) || d[0] == '_')) return false;
  for (char c : d)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''))
      return false;
  return d != "new" && d != "tau";
}

// Picks one printable identifier per name.  Free names keep their display
// (that is their identity); binders are renamed on collision.
class DisplayMap {
 public:
  DisplayMap(const Session& s, const TermPtr& t) : s_(s) {
    for (NameId f : free_names(t)) {
      map_[f] = s_.display(f);
      taken_.insert(s_.display(f));
    }
    assign_bound(t);
  }

  const std::string& of(NameId id) const { return map_.at(id); }

 private:
  void assign(NameId id) {
    if (map_.count(id)) return;
    std::string d = s_.display(id);
    if (!valid_ident(d)) d = "x";
    if (taken_.count(d)) {
      int k = 1;
      std::string cand;
      do {
        cand = d + std::to_string(k++);
      } while (taken_.count(cand));
      d = cand;
    }
    taken_.insert(d);
    map_[id] = d;
  }

  void assign_bound(const TermPtr& t) {
    switch (t->kind) {
      case TermKind::Nil:
        return;
      case TermKind::Restrict:
        assign(t->bound);
        assign_bound(t->body);
        return;
      case TermKind::Par:
        for (auto& p : t->parts) assign_bound(p);
        return;
      case TermKind::Choice:
      case TermKind::Repl:
        for (auto& b : t->branches) {
          if (b.prefix.kind == PrefixKind::In) assign(b.prefix.name);
          assign_bound(b.cont);
        }
        return;
    }
  }

  const Session& s_;
  std::map<NameId, std::string> map_;
  std::set<std::string> taken_;
};

class Printer {
 public:
  Printer(const Session& s, const TermPtr& t, const PrettyOptions& opts)
      : s_(s), names_(s, t), opts_(opts) {}

  std::string run(const TermPtr& t) {
    std::ostringstream os;
    print_par(os, t);
    return os.str();
  }

 private:
  void print_par(std::ostringstream& os, const TermPtr& t) {
    if (t->kind != TermKind::Par) {
      print_operand(os, t, /*last=*/true);
      return;
    }
    for (std::size_t i = 0; i < t->parts.size(); ++i) {
      if (i) os << " | ";
      print_operand(os, t->parts[i], i + 1 == t->parts.size());
    }
  }

  // one '|' operand; a non-final 'new' must be parenthesized or it would
  // swallow the rest of the composition
  void print_operand(std::ostringstream& os, const TermPtr& t, bool last) {
    if (t->kind == TermKind::Restrict && !last) {
      os << "(";
      print_par(os, t);
      os << ")";
      return;
    }
    print_atom(os, t);
  }

  void print_atom(std::ostringstream& os, const TermPtr& t) {
    switch (t->kind) {
      case TermKind::Nil:
        os << "0";
        return;
      case TermKind::Restrict:
        os << "new " << names_.of(t->bound);
        if (opts_.annotations && t->annot) os << ": " << type(t->annot);
        os << ". ";
        print_par(os, t->body);
        return;
      case TermKind::Par:
        os << "(";
        print_par(os, t);
        os << ")";
        return;
      case TermKind::Choice:
        print_choice(os, t->branches);
        return;
      case TermKind::Repl:
        os << "!";
        if (t->branches.size() > 1) {
          os << "(";
          print_choice(os, t->branches);
          os << ")";
        } else {
          print_branch(os, t->branches[0]);
        }
        return;
    }
  }

  void print_choice(std::ostringstream& os, const std::vector<Branch>& bs) {
    for (std::size_t i = 0; i < bs.size(); ++i) {
      if (i) os << " + ";
      print_branch(os, bs[i]);
    }
  }

  void print_branch(std::ostringstream& os, const Branch& b) {
    switch (b.prefix.kind) {
      case PrefixKind::Tau:
        os << "tau";
        break;
      case PrefixKind::In:
        os << names_.of(b.prefix.chan) << "(" << names_.of(b.prefix.name) << ")";
        break;
      case PrefixKind::Out:
        os << names_.of(b.prefix.chan) << "<" << names_.of(b.prefix.name) << ">";
        break;
    }
    const TermPtr& c = b.cont;
    if (c->kind == TermKind::Nil) return;
    os << ".";
    bool parens = c->kind == TermKind::Par || c->kind == TermKind::Restrict ||
                  (c->kind == TermKind::Choice && c->branches.size() > 1);
    if (parens) {
      os << "(";
      print_par(os, c);
      os << ")";
    } else {
      print_atom(os, c);
    }
  }

  std::string type(const TypeExprPtr& t) { return type_to_string(s_, t); }

  const Session& s_;
  DisplayMap names_;
  const PrettyOptions& opts_;
};

}  // namespace

std::string pretty(const Session& s, const TermPtr& t, const PrettyOptions& opts) {
  Printer p(s, t, opts);
  return p.run(t);
}

}  // namespace pihier
