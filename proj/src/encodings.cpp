#include "pihier/encodings.hpp"

#include <json.hpp>

#include <cassert>
#include <sstream>
#include <stdexcept>

namespace pihier {

namespace {

using nlohmann::json;

std::string num(std::size_t i) { return std::to_string(i); }

void require(bool cond, const std::string& what) {
  if (!cond) throw std::runtime_error(what);
}

// Source text for the counter serving place i.  It holds the current token
// channel, hands out one token per increment, absorbs one per decrement, and
// swaps in a fresh token channel on reset.
std::string counter_source(std::size_t i) {
  std::string p = "p" + num(i), v = "v" + num(i), r = "r" + num(i);
  std::string inc = "inc" + num(i), dec = "dec" + num(i), rst = "rst" + num(i);
  return "(!" + p + "(" + v + ").(" + inc + "?().(" + v + "!().0 | " + p +
         "<" + v + ">.0) + " + dec + "?()." + v + "?()." + p + "<" + v +
         ">.0 + " + rst + "?().new " + r + ". " + p + "<" + r + ">.0))";
}

// Source text for one marked place: the place channel offers the token
// channel, alongside one pending token send per unit of the marking.
std::string place_source(std::size_t i, std::size_t marking) {
  std::string p = "p" + num(i), t = "t" + num(i);
  if (marking == 0) return "(new " + t + ". " + p + "<" + t + ">.0)";
  std::string body = p + "<" + t + ">.0";
  for (std::size_t k = 0; k < marking; ++k) body += " | " + t + "!().0";
  return "(new " + t + ". (" + body + "))";
}

// Derives the missing annotation of a restriction from how the bound name is
// first sent: its type is the payload type of the sending channel.  Generated
// terms leave every restriction bare, so this fills them all, including the
// binders the parser introduces for the nullary send shorthand.
NameId first_sender(const TermPtr& t, NameId msg) {
  switch (t->kind) {
    case TermKind::Nil:
      return no_name;
    case TermKind::Restrict:
      return first_sender(t->body, msg);
    case TermKind::Par:
      for (const TermPtr& part : t->parts) {
        NameId c = first_sender(part, msg);
        if (c != no_name) return c;
      }
      return no_name;
    case TermKind::Choice:
    case TermKind::Repl:
      for (const Branch& b : t->branches) {
        if (b.prefix.kind == PrefixKind::Out && b.prefix.name == msg)
          return b.prefix.chan;
        NameId c = first_sender(b.cont, msg);
        if (c != no_name) return c;
      }
      return no_name;
  }
  return no_name;
}

void complete_annotations(const TermPtr& t, std::map<NameId, TypeExprPtr>& ctx,
                          std::map<NameId, TypeExprPtr>& out) {
  switch (t->kind) {
    case TermKind::Nil:
      return;
    case TermKind::Restrict: {
      TypeExprPtr ty = t->annot;
      if (!ty) {
        NameId chan = first_sender(t->body, t->bound);
        assert(chan != no_name);
        auto it = ctx.find(chan);
        assert(it != ctx.end() && it->second->payload);
        ty = it->second->payload;
      }
      ctx[t->bound] = ty;
      out[t->bound] = ty;
      complete_annotations(t->body, ctx, out);
      ctx.erase(t->bound);
      return;
    }
    case TermKind::Par:
      for (const TermPtr& part : t->parts) complete_annotations(part, ctx, out);
      return;
    case TermKind::Choice:
    case TermKind::Repl:
      for (const Branch& b : t->branches) {
        if (b.prefix.kind == PrefixKind::In) {
          auto it = ctx.find(b.prefix.chan);
          assert(it != ctx.end() && it->second->payload);
          ctx[b.prefix.name] = it->second->payload;
          complete_annotations(b.cont, ctx, out);
          ctx.erase(b.prefix.name);
        } else {
          complete_annotations(b.cont, ctx, out);
        }
      }
      return;
  }
}

// Shared tail of both encoders: parse the source, type the free names per
// `env_types` (display name to type), fill in every restriction annotation,
// and package the chain hierarchy.
Encoded assemble(Session& s, std::string source,
                 const std::vector<std::pair<std::string, TypeExprPtr>>& env_types,
                 const std::vector<BaseId>& chain) {
  Encoded e;
  e.source = std::move(source);
  TermPtr plain = parse_term(s, e.source);
  for (const auto& [name, ty] : env_types) e.env[s.intern_free(name)] = ty;

  std::map<NameId, TypeExprPtr> ctx = e.env;
  complete_annotations(plain, ctx, e.annotation);
  e.term = annotate(plain, e.annotation);
  e.hierarchy = Hierarchy::chain(chain);
  return e;
}

}  // namespace

ResetNet reset_net_from_json(const std::string& text) {
  json j = json::parse(text);
  ResetNet n;
  require(j.is_object() && j.contains("places") && j.contains("initial"),
          "reset net needs \"places\" and \"initial\"");
  n.places = j.at("places").get<std::size_t>();
  n.initial = j.at("initial").get<std::vector<std::size_t>>();
  require(n.initial.size() == n.places, "initial marking size != places");
  for (const json& jt : j.value("transitions", json::array())) {
    ResetNet::Transition t;
    t.update = jt.at("update").get<std::vector<int>>();
    require(t.update.size() == n.places, "transition update size != places");
    for (int u : t.update)
      require(u >= -1 && u <= 1, "transition update entries must be -1, 0 or 1");
    for (std::size_t r : jt.value("reset", std::vector<std::size_t>{})) {
      require(r >= 1 && r <= n.places, "reset place out of range");
      t.reset.insert(r);
    }
    n.transitions.push_back(std::move(t));
  }
  return n;
}

std::string reset_net_to_json(const ResetNet& n) {
  json j;
  j["places"] = n.places;
  j["transitions"] = json::array();
  for (const ResetNet::Transition& t : n.transitions)
    j["transitions"].push_back({{"update", t.update},
                                {"reset", std::vector<std::size_t>(
                                              t.reset.begin(), t.reset.end())}});
  j["initial"] = n.initial;
  return j.dump(2);
}

ResetNet random_reset_net(std::mt19937& rng, std::size_t max_places,
                          std::size_t max_transitions) {
  ResetNet n;
  n.places = std::uniform_int_distribution<std::size_t>(1, max_places)(rng);
  std::size_t trans =
      std::uniform_int_distribution<std::size_t>(0, max_transitions)(rng);
  for (std::size_t k = 0; k < trans; ++k) {
    ResetNet::Transition t;
    for (std::size_t i = 0; i < n.places; ++i)
      t.update.push_back(std::uniform_int_distribution<int>(-1, 1)(rng));
    for (std::size_t i = 1; i <= n.places; ++i)
      if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) t.reset.insert(i);
    n.transitions.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < n.places; ++i)
    n.initial.push_back(std::uniform_int_distribution<std::size_t>(0, 2)(rng));
  return n;
}

Encoded encode_reset_net(Session& s, const ResetNet& n) {
  assert(n.initial.size() == n.places);
  std::vector<std::string> parts = {"valid!().0"};
  for (std::size_t i = 1; i <= n.places; ++i) {
    parts.push_back(place_source(i, n.initial[i - 1]));
    parts.push_back(counter_source(i));
  }
  // A transition takes the validity token, performs its decrements, then its
  // increments, then its resets, and hands the token back.
  for (const ResetNet::Transition& t : n.transitions) {
    assert(t.update.size() == n.places);
    std::string seq = "(!valid?().";
    for (std::size_t i = 1; i <= n.places; ++i)
      if (t.update[i - 1] < 0) seq += "dec" + num(i) + "!().";
    for (std::size_t i = 1; i <= n.places; ++i)
      if (t.update[i - 1] > 0) seq += "inc" + num(i) + "!().";
    for (std::size_t r : t.reset) seq += "rst" + num(r) + "!().";
    parts.push_back(seq + "valid!().0)");
  }
  std::string source = parts[0];
  for (std::size_t k = 1; k < parts.size(); ++k) source += " | " + parts[k];

  // Bases, low to high: the free channels, then the token channels, then the
  // payloads of the signal channels.  Payload bases follow the order in which
  // a transition nests its sends (decrements, increments, resets, validity),
  // and every payload sits above every free channel so that restricting the
  // payload names is environment-safe.
  std::vector<BaseId> chain = {s.intern_base("valid")};
  for (std::size_t i = 1; i <= n.places; ++i) {
    chain.push_back(s.intern_base("inc" + num(i)));
    chain.push_back(s.intern_base("dec" + num(i)));
    chain.push_back(s.intern_base("rst" + num(i)));
  }
  for (std::size_t i = 1; i <= n.places; ++i)
    chain.push_back(s.intern_base("p" + num(i)));
  for (std::size_t i = 1; i <= n.places; ++i)
    chain.push_back(s.intern_base("t" + num(i)));
  for (const char* kind : {"zdec", "zinc", "zrst", "zt"})
    for (std::size_t i = 1; i <= n.places; ++i)
      chain.push_back(s.intern_base(kind + num(i)));
  chain.push_back(s.intern_base("zvalid"));

  auto bare = [&s](const std::string& b) {
    return make_base_type(s.intern_base(b));
  };
  std::vector<std::pair<std::string, TypeExprPtr>> env;
  env.emplace_back("valid", make_chan_type(s.intern_base("valid"), bare("zvalid")));
  for (std::size_t i = 1; i <= n.places; ++i) {
    env.emplace_back("inc" + num(i), make_chan_type(s.intern_base("inc" + num(i)),
                                                    bare("zinc" + num(i))));
    env.emplace_back("dec" + num(i), make_chan_type(s.intern_base("dec" + num(i)),
                                                    bare("zdec" + num(i))));
    env.emplace_back("rst" + num(i), make_chan_type(s.intern_base("rst" + num(i)),
                                                    bare("zrst" + num(i))));
    env.emplace_back("p" + num(i),
                     make_chan_type(s.intern_base("p" + num(i)),
                                    make_chan_type(s.intern_base("t" + num(i)),
                                                   bare("zt" + num(i)))));
  }
  return assemble(s, std::move(source), env, chain);
}

MinskyMachine minsky_from_json(const std::string& text) {
  json j = json::parse(text);
  MinskyMachine m;
  require(j.is_object() && j.contains("counters") && j.contains("instructions"),
          "machine needs \"counters\" and \"instructions\"");
  m.counters = j.at("counters").get<std::size_t>();
  for (const json& ji : j.at("instructions")) {
    require(ji.is_array() && ji.size() >= 1 && ji[0].is_string(),
            "instruction must be [\"inc\", c, j] or [\"dec\", c, j1, j2]");
    MinskyMachine::Instr in;
    std::string op = ji[0].get<std::string>();
    if (op == "inc") {
      require(ji.size() == 3, "inc takes a counter and a jump target");
      in.inc = true;
      in.counter = ji[1].get<std::size_t>();
      in.jump1 = in.jump2 = ji[2].get<std::size_t>();
    } else if (op == "dec") {
      require(ji.size() == 4, "dec takes a counter and two jump targets");
      in.inc = false;
      in.counter = ji[1].get<std::size_t>();
      in.jump1 = ji[2].get<std::size_t>();
      in.jump2 = ji[3].get<std::size_t>();
    } else {
      require(false, "unknown instruction op: " + op);
    }
    require(in.counter >= 1 && in.counter <= m.counters,
            "instruction counter out of range");
    m.instructions.push_back(in);
  }
  for (const MinskyMachine::Instr& in : m.instructions)
    require(in.jump1 >= 1 && in.jump1 <= m.instructions.size() &&
                in.jump2 >= 1 && in.jump2 <= m.instructions.size(),
            "jump target out of range");
  m.entry = j.value("entry", std::size_t{1});
  if (!m.instructions.empty())
    require(m.entry >= 1 && m.entry <= m.instructions.size(),
            "entry out of range");
  m.registers = j.value("registers", std::vector<std::size_t>(m.counters, 0));
  require(m.registers.size() == m.counters, "registers size != counters");
  return m;
}

std::string minsky_to_json(const MinskyMachine& m) {
  json j;
  j["counters"] = m.counters;
  j["instructions"] = json::array();
  for (const MinskyMachine::Instr& in : m.instructions) {
    if (in.inc)
      j["instructions"].push_back({"inc", in.counter, in.jump1});
    else
      j["instructions"].push_back({"dec", in.counter, in.jump1, in.jump2});
  }
  j["entry"] = m.entry;
  j["registers"] = m.registers;
  return j.dump(2);
}

Encoded encode_minsky(Session& s, const MinskyMachine& m) {
  assert(m.registers.size() == m.counters);
  std::vector<std::string> parts;
  for (std::size_t i = 1; i <= m.counters; ++i) {
    parts.push_back(place_source(i, m.registers[i - 1]));
    parts.push_back(counter_source(i));
  }
  parts.push_back("i" + num(m.entry) + "!().0");
  // An increment signals the counter then jumps; a decrement either removes a
  // token and jumps, or resets the counter and takes the zero branch.
  for (std::size_t k = 0; k < m.instructions.size(); ++k) {
    const MinskyMachine::Instr& in = m.instructions[k];
    std::string label = "i" + num(k + 1), c = num(in.counter);
    if (in.inc) {
      parts.push_back("(!" + label + "?().inc" + c + "!().i" + num(in.jump1) +
                      "!().0)");
    } else {
      parts.push_back("(!" + label + "?().(dec" + c + "!().i" + num(in.jump1) +
                      "!().0 + rst" + c + "!().i" + num(in.jump2) + "!().0))");
    }
  }
  std::string source = parts[0];
  for (std::size_t k = 1; k < parts.size(); ++k) source += " | " + parts[k];

  std::vector<BaseId> chain;
  for (std::size_t i = 1; i <= m.counters; ++i) {
    chain.push_back(s.intern_base("inc" + num(i)));
    chain.push_back(s.intern_base("dec" + num(i)));
    chain.push_back(s.intern_base("rst" + num(i)));
  }
  for (std::size_t k = 1; k <= m.instructions.size(); ++k)
    chain.push_back(s.intern_base("i" + num(k)));
  if (m.instructions.empty()) chain.push_back(s.intern_base("i" + num(m.entry)));
  for (std::size_t i = 1; i <= m.counters; ++i)
    chain.push_back(s.intern_base("p" + num(i)));
  for (std::size_t i = 1; i <= m.counters; ++i)
    chain.push_back(s.intern_base("t" + num(i)));
  for (const char* kind : {"zinc", "zdec", "zrst", "zt"})
    for (std::size_t i = 1; i <= m.counters; ++i)
      chain.push_back(s.intern_base(kind + num(i)));
  for (std::size_t k = 1; k <= m.instructions.size(); ++k)
    chain.push_back(s.intern_base("zi" + num(k)));
  if (m.instructions.empty()) chain.push_back(s.intern_base("zi" + num(m.entry)));

  auto bare = [&s](const std::string& b) {
    return make_base_type(s.intern_base(b));
  };
  std::vector<std::pair<std::string, TypeExprPtr>> env;
  for (std::size_t i = 1; i <= m.counters; ++i) {
    env.emplace_back("inc" + num(i), make_chan_type(s.intern_base("inc" + num(i)),
                                                    bare("zinc" + num(i))));
    env.emplace_back("dec" + num(i), make_chan_type(s.intern_base("dec" + num(i)),
                                                    bare("zdec" + num(i))));
    env.emplace_back("rst" + num(i), make_chan_type(s.intern_base("rst" + num(i)),
                                                    bare("zrst" + num(i))));
    env.emplace_back("p" + num(i),
                     make_chan_type(s.intern_base("p" + num(i)),
                                    make_chan_type(s.intern_base("t" + num(i)),
                                                   bare("zt" + num(i)))));
  }
  std::set<std::size_t> labels;
  for (std::size_t k = 1; k <= m.instructions.size(); ++k) labels.insert(k);
  labels.insert(m.entry);
  for (std::size_t k : labels)
    env.emplace_back("i" + num(k), make_chan_type(s.intern_base("i" + num(k)),
                                                  bare("zi" + num(k))));
  return assemble(s, std::move(source), env, chain);
}

const std::vector<CorpusEntry>& corpus() {
  static const std::vector<CorpusEntry> entries = [] {
    std::vector<CorpusEntry> v;

    v.push_back(
        {"client_server",
         "new s: s[m[d]]. new c: c[m[d]]. ("
         "  (!s(x).new d: d. x<d>.0)"
         "  | (!c(m).(s<m>.0 | m(y).c<m>.0))"
         "  | (!tau.new m: m[d]. c<m>.0))",
         "s < c < m < d", "", true,
         "request/response server with a client pool; mailbox nesting depth "
         "stays bounded"});

    v.push_back(
        {"counter_pair",
         "(new p1. new t1. (" + counter_source(1) + " | p1<t1>.0))"
         " | (new p2. new t2. (" + counter_source(2) + " | p2<t2>.0))",
         "", "", true,
         "two independent counters driven by free inc/dec/rst signals"});

    v.push_back(
        {"ring",
         "new m. new s0. ("
         "  (!m(n).s0?().new sx. ((!sx?().n!().0) | m<sx>.0 | sx!().0))"
         "  | m<s0>.0 | s0!().0)",
         "", "", false,
         "token ring that keeps extending itself; restriction depth grows "
         "without bound"});

    v.push_back(
        {"mailbox_forwarders",
         "(!tau.new a. p<a>.0)"
         " | (!tau.new b. q<b>.0)"
         " | (!(p(x).(!(q(y).x<y>.0)) + q(x2).(!(p(y2).x2<y2>.0))))",
         "", "", false,
         "two generators feed forwarders in both directions, so each payload "
         "type would contain the other"});

    v.push_back(
        {"one_pending_answer",
         "new s. new m. ("
         "  (!s(x).new d. x<d>.0)"
         "  | m(y).c<m>.0 | new d2. m<d2>.0)",
         "", "", true,
         "server state with one answered mailbox still waiting to be read"});

    v.push_back(
        {"two_pending_answers",
         "new s. new m. new m2. ("
         "  (!s(x).new d. x<d>.0)"
         "  | m(y).c<m>.0 | new d2. m<d2>.0"
         "  | m2(y2).c<m2>.0 | new d3. m2<d3>.0)",
         "", "", true,
         "two answered mailboxes pending in parallel; the client-server "
         "system reaches this"});

    v.push_back(
        {"double_answer",
         "new s. new m. ("
         "  (!s(x).new d. x<d>.0)"
         "  | m(y).c<m>.0"
         "  | (new d2. m<d2>.0) | (new d3. m<d3>.0))",
         "", "", true,
         "two answers pending on one mailbox; the client-server protocol "
         "never produces this state"});

    v.push_back(
        {"shared_payload_mailboxes",
         "new m. new m2. ("
         "  m(y).c<m>.0 | m2(y2).c<m2>.0"
         "  | new d. (m<d>.0 | m2<d>.0))",
         "", "", false,
         "one payload shared across two mailboxes of the same type ties them "
         "into a single scope, which no strict hierarchy can arrange"});

    {
      Session s;
      ResetNet cell;
      cell.places = 1;
      cell.transitions.push_back({{+1}, {}});
      cell.initial = {1};
      Encoded e = encode_reset_net(s, cell);
      std::string env_text;
      for (const auto& [name, ty] : e.env) {
        if (!env_text.empty()) env_text += ", ";
        env_text += s.display(name) + " : " + type_to_string(s, ty);
      }
      v.push_back({"reset_cell", e.source, hierarchy_to_text(s, e.hierarchy),
                   env_text, true,
                   "one-place reset net with an increment transition; tokens "
                   "grow without bound but the type depth does not"});
    }

    return v;
  }();
  return entries;
}

}  // namespace pihier
