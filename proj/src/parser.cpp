#include <cctype>
#include <optional>
#include <sstream>
#include <vector>

#include "pihier/term.hpp"

namespace pihier {

namespace {

enum class Tok {
  Ident, New, Tau, Zero, Dot, LParen, RParen, Pipe, Plus, Bang, Query,
  LAngle, RAngle, Colon, LBracket, RBracket, End
};

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_ws();
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      tok_.text.clear();
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (std::isalnum(static_cast<unsigned char>(d)) || d == '_' || d == '\'') {
          bump();
        } else {
          break;
        }
      }
      tok_.text = std::string(src_.substr(start, pos_ - start));
      if (tok_.text == "new")
        tok_.kind = Tok::New;
      else if (tok_.text == "tau")
        tok_.kind = Tok::Tau;
      else
        tok_.kind = Tok::Ident;
      return;
    }
    bump();
    switch (c) {
      case '0': tok_.kind = Tok::Zero; return;
      case '.': tok_.kind = Tok::Dot; return;
      case '(': tok_.kind = Tok::LParen; return;
      case ')': tok_.kind = Tok::RParen; return;
      case '|': tok_.kind = Tok::Pipe; return;
      case '+': tok_.kind = Tok::Plus; return;
      case '!': tok_.kind = Tok::Bang; return;
      case '?': tok_.kind = Tok::Query; return;
      case '<': tok_.kind = Tok::LAngle; return;
      case '>': tok_.kind = Tok::RAngle; return;
      case ':': tok_.kind = Tok::Colon; return;
      case '[': tok_.kind = Tok::LBracket; return;
      case ']': tok_.kind = Tok::RBracket; return;
      default: {
        std::ostringstream os;
        os << "unexpected character '" << c << "'";
        throw ParseError(os.str(), line_, col_);
      }
    }
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  Parser(Session& s, std::string_view src) : s_(s), lex_(src) {}

  TermPtr parse() {
    TermPtr t = parse_par();
    expect(Tok::End, "end of input");
    return t;
  }

  TypeExprPtr parse_type_only() {
    TypeExprPtr t = parse_type();
    expect(Tok::End, "end of input");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, lex_.peek().line, lex_.peek().col);
  }

  Token expect(Tok k, const char* what) {
    if (lex_.peek().kind != k) fail(std::string("expected ") + what);
    return lex_.take();
  }

  // P ::= unit ('|' unit)*   with '+' handled one level below
  TermPtr parse_par() {
    std::vector<TermPtr> parts;
    parts.push_back(parse_sum());
    while (lex_.peek().kind == Tok::Pipe) {
      lex_.take();
      parts.push_back(parse_sum());
    }
    return make_par(std::move(parts));
  }

  // Sums combine guarded choices only.  Output shorthand in a branch hoists a
  // fresh restriction just above the whole sum.
  TermPtr parse_sum() {
    std::vector<NameId> hoists;
    TermPtr first = parse_unit(&hoists);
    if (lex_.peek().kind != Tok::Plus) return wrap_hoists(first, hoists);
    if (first->kind != TermKind::Choice)
      fail("only guarded terms can be combined with '+'");
    std::vector<Branch> branches = first->branches;
    while (lex_.peek().kind == Tok::Plus) {
      lex_.take();
      TermPtr next = parse_unit(&hoists);
      if (next->kind != TermKind::Choice)
        fail("only guarded terms can be combined with '+'");
      branches.insert(branches.end(), next->branches.begin(), next->branches.end());
    }
    return wrap_hoists(make_choice(std::move(branches)), hoists);
  }

  static TermPtr wrap_hoists(TermPtr t, const std::vector<NameId>& hoists) {
    for (auto it = hoists.rbegin(); it != hoists.rend(); ++it)
      t = make_restrict(*it, nullptr, std::move(t));
    return t;
  }

  // unit ::= '0' | 'new' x [':' TY] '.' P | '!' choice | '(' P ')' | guard
  TermPtr parse_unit(std::vector<NameId>* hoists) {
    switch (lex_.peek().kind) {
      case Tok::Zero:
        lex_.take();
        return make_nil();
      case Tok::New:
        return parse_new();
      case Tok::Bang:
        return parse_repl();
      case Tok::LParen: {
        lex_.take();
        TermPtr t = parse_par();
        expect(Tok::RParen, "')'");
        return t;
      }
      case Tok::Ident:
      case Tok::Tau:
        return parse_guard(hoists);
      default:
        fail("expected a process");
    }
  }

  TermPtr parse_new() {
    lex_.take();  // 'new'
    Token name = expect(Tok::Ident, "a name after 'new'");
    TypeExprPtr annot;
    if (lex_.peek().kind == Tok::Colon) {
      lex_.take();
      annot = parse_type();
    }
    expect(Tok::Dot, "'.' after 'new' binder");
    NameId id = s_.fresh_name(name.text);
    scope_.emplace_back(name.text, id);
    TermPtr body = parse_par();  // 'new' always scopes maximally right
    scope_.pop_back();
    return make_restrict(id, std::move(annot), body);
  }

  TermPtr parse_repl() {
    Token bang = lex_.take();
    TermPtr body;
    std::vector<NameId> hoists;
    if (lex_.peek().kind == Tok::LParen) {
      lex_.take();
      // allow shorthand sums directly under '!': the sum is re-parsed here so
      // hoisted restrictions can be detected
      body = parse_sum_inner(&hoists);
      expect(Tok::RParen, "')'");
    } else {
      body = parse_guard(&hoists);
    }
    if (!hoists.empty())
      throw ParseError(
          "output shorthand cannot guard a replication (the fresh name would "
          "be shared across copies)",
          bang.line, bang.col);
    if (body->kind != TermKind::Choice)
      throw ParseError("'!' applies to a guarded choice", bang.line, bang.col);
    return make_repl(body->branches);
  }

  // like parse_sum but reporting hoists to the caller instead of wrapping
  TermPtr parse_sum_inner(std::vector<NameId>* hoists) {
    TermPtr first = parse_unit(hoists);
    if (lex_.peek().kind != Tok::Plus) return first;
    if (first->kind != TermKind::Choice)
      fail("only guarded terms can be combined with '+'");
    std::vector<Branch> branches = first->branches;
    while (lex_.peek().kind == Tok::Plus) {
      lex_.take();
      TermPtr next = parse_unit(hoists);
      if (next->kind != TermKind::Choice)
        fail("only guarded terms can be combined with '+'");
      branches.insert(branches.end(), next->branches.begin(), next->branches.end());
    }
    return make_choice(std::move(branches));
  }

  TermPtr parse_guard(std::vector<NameId>* hoists) {
    Prefix p;
    bool bound_var = false;
    if (lex_.peek().kind == Tok::Tau) {
      lex_.take();
      p.kind = PrefixKind::Tau;
    } else {
      Token chan = expect(Tok::Ident, "a channel name");
      p.chan = resolve(chan.text);
      switch (lex_.peek().kind) {
        case Tok::LParen: {
          lex_.take();
          Token var = expect(Tok::Ident, "a bound variable");
          expect(Tok::RParen, "')'");
          p.kind = PrefixKind::In;
          p.name = s_.fresh_name(var.text);
          scope_.emplace_back(var.text, p.name);
          bound_var = true;
          break;
        }
        case Tok::LAngle: {
          lex_.take();
          Token msg = expect(Tok::Ident, "a message name");
          expect(Tok::RAngle, "'>'");
          p.kind = PrefixKind::Out;
          p.name = resolve(msg.text);
          break;
        }
        case Tok::Query: {
          lex_.take();
          expect(Tok::LParen, "'('");
          expect(Tok::RParen, "')'");
          p.kind = PrefixKind::In;
          p.name = s_.fresh_name("_" + chan.text);
          scope_.emplace_back("", p.name);  // never referenced
          bound_var = true;
          break;
        }
        case Tok::Bang: {
          lex_.take();
          expect(Tok::LParen, "'('");
          expect(Tok::RParen, "')'");
          p.kind = PrefixKind::Out;
          p.name = s_.fresh_name("_" + chan.text);
          if (!hoists) fail("output shorthand is not allowed here");
          hoists->push_back(p.name);
          break;
        }
        default:
          fail("expected '(', '<', '?()' or '!()' after channel name");
      }
    }
    TermPtr cont = make_nil();
    if (lex_.peek().kind == Tok::Dot) {
      lex_.take();
      cont = parse_cont();
    }
    if (bound_var) scope_.pop_back();
    Branch b;
    b.prefix = p;
    b.cont = cont;
    return make_choice({std::move(b)});
  }

  // continuation at prefix precedence: stops before '+' and '|'
  TermPtr parse_cont() {
    switch (lex_.peek().kind) {
      case Tok::Zero:
        lex_.take();
        return make_nil();
      case Tok::New:
        return parse_new();
      case Tok::Bang:
        return parse_repl();
      case Tok::LParen: {
        lex_.take();
        TermPtr t = parse_par();
        expect(Tok::RParen, "')'");
        return t;
      }
      case Tok::Ident:
      case Tok::Tau: {
        std::vector<NameId> hoists;
        TermPtr g = parse_guard(&hoists);
        return wrap_hoists(g, hoists);
      }
      default:
        fail("expected a continuation");
    }
  }

  TypeExprPtr parse_type() {
    Token base = expect(Tok::Ident, "a base type name");
    BaseId b = s_.intern_base(base.text);
    if (lex_.peek().kind == Tok::LBracket) {
      lex_.take();
      TypeExprPtr payload = parse_type();
      expect(Tok::RBracket, "']'");
      return make_chan_type(b, std::move(payload));
    }
    return make_base_type(b);
  }

  NameId resolve(const std::string& display) {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == display) return it->second;
    return s_.intern_free(display);
  }

  Session& s_;
  Lexer lex_;
  std::vector<std::pair<std::string, NameId>> scope_;
};

}  // namespace

TermPtr parse_term(Session& s, std::string_view src) {
  Parser p(s, src);
  return p.parse();
}

TypeExprPtr parse_type(Session& s, std::string_view src) {
  Parser p(s, src);
  return p.parse_type_only();
}

}  // namespace pihier
