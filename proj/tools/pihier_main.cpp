#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pihier/encodings.hpp"
#include "pihier/forest.hpp"
#include "pihier/hierarchy.hpp"
#include "pihier/infer.hpp"
#include "pihier/normal.hpp"
#include "pihier/reduction.hpp"
#include "pihier/tcompat.hpp"
#include "pihier/term.hpp"
#include "pihier/typing.hpp"

using namespace pihier;
using nlohmann::json;

namespace {

constexpr int kPositive = 0;
constexpr int kNegative = 1;
constexpr int kUsage = 2;
constexpr int kInconclusive = 3;

struct Config {
  std::string input;
  std::string query;
  std::string hierarchy;
  std::string env;
  std::size_t max_states = 2000;
  std::size_t max_depth = 12;
  std::size_t backtracks = 100000;
  std::size_t jobs = 1;
  std::size_t budget = 2000000;
  std::string format = "text";
  bool prune_nf = false;
  bool min_depth = false;
  bool term_only = false;
  bool random_net = false;
  std::string example;
};

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Option values that name an existing file are read from it; anything else is
// taken as inline text.
std::string file_or_inline(const std::string& spec) {
  std::ifstream f(spec);
  if (!f) return spec;
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Hierarchy load_hierarchy(Session& s, const std::string& spec) {
  std::string text = file_or_inline(spec);
  std::size_t at = text.find_first_not_of(" \t\r\n");
  if (at != std::string::npos && text[at] == '{') {
    json j = json::parse(text);
    Hierarchy h;
    for (const json& n : j.value("nodes", json::array()))
      h.add_base(s.intern_base(n.get<std::string>()));
    for (const json& e : j.value("edges", json::array()))
      h.add_edge(s.intern_base(e.at(0).get<std::string>()),
                 s.intern_base(e.at(1).get<std::string>()));
    return h;
  }
  return parse_hierarchy(s, text);
}

TermPtr load_term(Session& s, const std::string& path) {
  return parse_term(s, read_file(path));
}

ExploreOptions bounds_of(const Config& cfg) {
  ExploreOptions o;
  o.max_states = cfg.max_states;
  o.max_depth = cfg.max_depth;
  o.jobs = cfg.jobs;
  return o;
}

std::mt19937 seeded_rng() {
  unsigned seed = 0;
  if (const char* env = std::getenv("PI_HIER_SEED")) seed = std::atoi(env);
  return std::mt19937(seed);
}

void emit(const std::string& text) { std::cout << text << "\n"; }

int cmd_parse(const Config& cfg) {
  Session s;
  TermPtr t = load_term(s, cfg.input);
  if (cfg.format == "json") {
    json j;
    j["term"] = pretty(s, t, {.annotations = true});
    json fn = json::array();
    for (NameId x : free_names(t)) fn.push_back(s.display(x));
    j["free"] = fn;
    j["restrictions"] = restriction_names(t).size();
    emit(j.dump(2));
  } else {
    emit(pretty(s, t, {.annotations = true}));
  }
  return kPositive;
}

int cmd_nf(const Config& cfg) {
  Session s;
  NormalForm n = nf(load_term(s, cfg.input));
  if (cfg.prune_nf) n = prune(n);
  if (cfg.format == "json") {
    json j;
    j["term"] = pretty(s, to_term(n), {.annotations = true});
    j["canonical"] = canonical(n);
    j["binders"] = n.binders.size();
    j["actives"] = n.actives.size();
    emit(j.dump(2));
  } else {
    emit(pretty(s, to_term(n), {.annotations = true}));
  }
  return kPositive;
}

int cmd_forest(const Config& cfg) {
  Session s;
  TermPtr t = load_term(s, cfg.input);
  if (cfg.min_depth) {
    std::optional<DepthResult> d = depth_exact(prune(nf(t)), cfg.budget);
    if (!d) {
      std::cerr << "search budget exhausted\n";
      emit(cfg.format == "json" ? "{\n  \"depth\": null\n}" : "inconclusive");
      return kInconclusive;
    }
    if (cfg.format == "json") {
      json j;
      j["depth"] = d->depth;
      j["witness"] = forest_to_text(s, d->witness);
      emit(j.dump(2));
    } else if (cfg.format == "dot") {
      emit(forest_to_dot(s, d->witness));
    } else {
      emit("depth: " + std::to_string(d->depth));
      emit(forest_to_text(s, d->witness));
    }
    return kPositive;
  }
  LabelledForest f = forest_of(t);
  if (cfg.format == "json") {
    json j;
    j["forest"] = forest_to_text(s, f);
    j["height"] = restriction_height(f);
    emit(j.dump(2));
  } else if (cfg.format == "dot") {
    emit(forest_to_dot(s, f));
  } else {
    emit(forest_to_text(s, f));
  }
  return kPositive;
}

int cmd_tcompat(const Config& cfg) {
  Session s;
  TermPtr t = load_term(s, cfg.input);
  Hierarchy h = load_hierarchy(s, cfg.hierarchy);
  PhiOutcome o = phi(h, nf(t));
  if (cfg.format == "json") {
    json j;
    j["compatible"] = o.ok;
    if (!o.ok && o.failure) j["failure"] = o.failure->what;
    if (o.ok) j["witness"] = forest_to_text(s, o.forest);
    emit(j.dump(2));
  } else if (o.ok) {
    emit("compatible");
    emit(forest_to_text(s, o.forest));
  } else {
    emit("not compatible");
    if (o.failure) emit(o.failure->what);
  }
  return o.ok ? kPositive : kNegative;
}

int cmd_check(const Config& cfg) {
  Session s;
  TermPtr t = load_term(s, cfg.input);
  Hierarchy h = load_hierarchy(s, cfg.hierarchy);
  TypeEnv env = cfg.env.empty() ? TypeEnv{} : parse_env(s, file_or_inline(cfg.env));
  TypingReport r = typecheck_term(s, h, env, t);
  if (cfg.format == "json") {
    json j;
    j["ok"] = r.ok;
    json vs = json::array();
    for (const TypeViolation& v : r.violations)
      vs.push_back({{"rule", v.rule}, {"where", v.where}, {"constraint", v.constraint}});
    j["violations"] = vs;
    emit(j.dump(2));
  } else {
    emit(report_to_text(s, r));
  }
  return r.ok ? kPositive : kNegative;
}

int cmd_infer(const Config& cfg) {
  Session s;
  TermPtr t = load_term(s, cfg.input);
  InferOptions opts;
  opts.max_backtracks = cfg.backtracks;
  InferenceResult r = infer(s, t, opts);
  emit(cfg.format == "json" ? inference_to_json(s, r) : inference_to_text(s, r));
  switch (r.status) {
    case InferenceResult::Status::Ok:
      return kPositive;
    case InferenceResult::Status::Unsat:
      return kNegative;
    case InferenceResult::Status::Inconclusive:
      return kInconclusive;
  }
  return kUsage;
}

int cmd_explore(const Config& cfg) {
  Session s;
  TermPtr t = load_term(s, cfg.input);
  StateGraph g = explore(s, t, bounds_of(cfg));
  if (cfg.format == "json") {
    emit(graph_to_json(s, g));
  } else if (cfg.format == "dot") {
    emit(graph_to_dot(s, g));
  } else {
    emit("states: " + std::to_string(g.states.size()));
    emit("edges: " + std::to_string(g.edges.size()));
    emit(std::string("exhausted: ") + (g.exhausted ? "yes" : "no"));
    for (std::size_t i = 0; i < g.states.size(); ++i)
      emit("s" + std::to_string(i) + " depth=" + std::to_string(g.depth[i]) +
           "  " + pretty(s, to_term(g.states[i])));
  }
  return g.exhausted ? kPositive : kInconclusive;
}

int cmd_cover(const Config& cfg) {
  Session s;
  TermPtr t = load_term(s, cfg.input);
  TermPtr q = load_term(s, cfg.query);
  CoverResult r = cover(s, t, q, bounds_of(cfg));
  std::string outcome = r.outcome == CoverOutcome::Covered        ? "covered"
                        : r.outcome == CoverOutcome::NotCoverable ? "not-coverable"
                                                                  : "unknown";
  if (cfg.format == "json") {
    json j;
    j["outcome"] = outcome;
    if (r.witness) j["witness"] = "s" + std::to_string(*r.witness);
    j["states_explored"] = r.states_explored;
    j["embed_budget_hit"] = r.embed_budget_hit;
    emit(j.dump(2));
  } else {
    std::string line = outcome + " (" + std::to_string(r.states_explored) +
                       " states explored";
    if (r.witness) line += ", witness s" + std::to_string(*r.witness);
    if (r.embed_budget_hit) line += ", embedding budget hit";
    emit(line + ")");
  }
  switch (r.outcome) {
    case CoverOutcome::Covered:
      return kPositive;
    case CoverOutcome::NotCoverable:
      return kNegative;
    default:
      return kInconclusive;
  }
}

int cmd_invariance(const Config& cfg) {
  Session s;
  TermPtr t = load_term(s, cfg.input);
  Hierarchy h = load_hierarchy(s, cfg.hierarchy);
  TypeEnv env = cfg.env.empty() ? TypeEnv{} : parse_env(s, file_or_inline(cfg.env));
  InvarianceReport r = check_invariance(s, h, env, t, bounds_of(cfg));
  if (cfg.format == "json") {
    json j;
    j["ok"] = r.ok;
    j["states_checked"] = r.states_checked;
    j["exhausted"] = r.exhausted;
    if (!r.ok) {
      j["failing_state"] = r.failing_key;
      j["detail"] = r.what;
    }
    emit(j.dump(2));
  } else if (!r.ok) {
    emit("violated after " + std::to_string(r.states_checked) + " states");
    emit(r.what);
  } else if (r.exhausted) {
    emit("holds on all " + std::to_string(r.states_checked) +
         " reachable states");
  } else {
    emit("no violation in " + std::to_string(r.states_checked) +
         " states explored (bounds hit)");
  }
  if (!r.ok) return kNegative;
  return r.exhausted ? kPositive : kInconclusive;
}

std::string chomp(std::string text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == ' '))
    text.pop_back();
  return text;
}

int emit_encoded(const Session& s, const Config& cfg, const Encoded& e) {
  if (cfg.term_only) {
    emit(e.source);
    return kPositive;
  }
  if (cfg.format == "json") {
    json j;
    j["source"] = e.source;
    j["term"] = pretty(s, e.term, {.annotations = true});
    j["hierarchy"] = chomp(hierarchy_to_text(s, e.hierarchy));
    j["env"] = env_to_text(s, e.env);
    emit(j.dump(2));
  } else {
    emit("term: " + e.source);
    emit("hierarchy: " + chomp(hierarchy_to_text(s, e.hierarchy)));
    emit("env: " + env_to_text(s, e.env));
  }
  return kPositive;
}

int cmd_encode_reset(const Config& cfg) {
  Session s;
  ResetNet n;
  if (cfg.random_net) {
    std::mt19937 rng = seeded_rng();
    n = random_reset_net(rng);
    std::cerr << reset_net_to_json(n) << "\n";
  } else {
    if (cfg.input.empty())
      throw std::runtime_error("reset-net needs an input file or --random");
    n = reset_net_from_json(read_file(cfg.input));
  }
  Encoded e = encode_reset_net(s, n);
  return emit_encoded(s, cfg, e);
}

int cmd_encode_minsky(const Config& cfg) {
  Session s;
  MinskyMachine m = minsky_from_json(read_file(cfg.input));
  Encoded e = encode_minsky(s, m);
  return emit_encoded(s, cfg, e);
}

int cmd_examples_list(const Config& cfg) {
  if (cfg.format == "json") {
    json j = json::array();
    for (const CorpusEntry& e : corpus())
      j.push_back({{"name", e.name},
                   {"typably_hierarchical", e.typably_hierarchical},
                   {"note", e.note}});
    emit(j.dump(2));
  } else {
    for (const CorpusEntry& e : corpus())
      emit(e.name + (e.typably_hierarchical ? "  [typable]    " : "  [untypable]  ") +
           e.note);
  }
  return kPositive;
}

int cmd_examples_show(const Config& cfg) {
  for (const CorpusEntry& e : corpus()) {
    if (e.name != cfg.example) continue;
    if (cfg.format == "json") {
      json j;
      j["name"] = e.name;
      j["source"] = e.source;
      j["hierarchy"] = e.hierarchy;
      j["env"] = e.env;
      j["typably_hierarchical"] = e.typably_hierarchical;
      j["note"] = e.note;
      emit(j.dump(2));
    } else {
      emit(e.source);
    }
    return kPositive;
  }
  std::cerr << "unknown example: " << cfg.example << "\n";
  return kUsage;
}

void add_format(CLI::App* sub, Config& cfg, bool dot = false) {
  sub->add_option("--format,-f", cfg.format, "output format")
      ->check(CLI::IsMember(dot ? std::vector<std::string>{"text", "json", "dot"}
                                : std::vector<std::string>{"text", "json"}));
  sub->add_flag_callback("--json", [&cfg] { cfg.format = "json"; },
                         "shorthand for --format json");
}

void add_bounds(CLI::App* sub, Config& cfg) {
  sub->add_option("--max-states", cfg.max_states, "state cap")->check(CLI::PositiveNumber);
  sub->add_option("--max-depth", cfg.max_depth, "depth cap")->check(CLI::PositiveNumber);
  sub->add_option("--jobs", cfg.jobs, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical pi-calculus analyzer"};
  app.require_subcommand(1);
  Config cfg;

  CLI::App* parse = app.add_subcommand("parse", "parse a term and print it back");
  parse->add_option("input", cfg.input, "term file or -")->required();
  add_format(parse, cfg);

  CLI::App* nf_cmd = app.add_subcommand("nf", "print the normal form");
  nf_cmd->add_option("input", cfg.input)->required();
  nf_cmd->add_flag("--prune", cfg.prune_nf, "drop dead binders and nil branches");
  add_format(nf_cmd, cfg);

  CLI::App* forest = app.add_subcommand("forest", "print the restriction forest");
  forest->add_option("input", cfg.input)->required();
  forest->add_flag("--min-depth", cfg.min_depth,
                   "search the congruence class for the minimal height");
  forest->add_option("--budget", cfg.budget, "search budget for --min-depth");
  add_format(forest, cfg, true);

  CLI::App* tcompat = app.add_subcommand("tcompat", "decide hierarchy compatibility");
  tcompat->add_option("input", cfg.input)->required();
  tcompat->add_option("--hierarchy,-H", cfg.hierarchy, "hierarchy file or inline text")
      ->required();
  add_format(tcompat, cfg);

  CLI::App* check = app.add_subcommand("check", "typecheck an annotated term");
  check->add_option("input", cfg.input)->required();
  check->add_option("--hierarchy,-H", cfg.hierarchy)->required();
  check->add_option("--env,-E", cfg.env, "environment file or inline text");
  add_format(check, cfg);

  CLI::App* infer_cmd = app.add_subcommand("infer", "infer a hierarchy and annotations");
  infer_cmd->add_option("input", cfg.input)->required();
  infer_cmd->add_option("--backtracks", cfg.backtracks, "search cap");
  add_format(infer_cmd, cfg);

  CLI::App* explore = app.add_subcommand("explore", "enumerate reachable states");
  explore->add_option("input", cfg.input)->required();
  add_bounds(explore, cfg);
  add_format(explore, cfg, true);

  CLI::App* cover_cmd = app.add_subcommand("cover", "search for a covering state");
  cover_cmd->add_option("input", cfg.input)->required();
  cover_cmd->add_option("--query", cfg.query, "term file to cover")->required();
  add_bounds(cover_cmd, cfg);
  add_format(cover_cmd, cfg);

  CLI::App* inv = app.add_subcommand("invariance",
                                     "typecheck every reachable state");
  inv->add_option("input", cfg.input)->required();
  inv->add_option("--hierarchy,-H", cfg.hierarchy)->required();
  inv->add_option("--env,-E", cfg.env);
  add_bounds(inv, cfg);
  add_format(inv, cfg);

  CLI::App* encode = app.add_subcommand("encode", "translate a net or machine");
  encode->require_subcommand(1);
  CLI::App* enc_rn = encode->add_subcommand("reset-net", "encode a reset net");
  enc_rn->add_option("input", cfg.input, "net json file or -");
  enc_rn->add_flag("--random", cfg.random_net,
                   "generate a random small net (PI_HIER_SEED fixes it)");
  enc_rn->add_flag("--term-only", cfg.term_only, "print just the term");
  add_format(enc_rn, cfg);
  CLI::App* enc_mm = encode->add_subcommand("minsky", "encode a counter machine");
  enc_mm->add_option("input", cfg.input, "machine json file or -")->required();
  enc_mm->add_flag("--term-only", cfg.term_only);
  add_format(enc_mm, cfg);

  CLI::App* examples = app.add_subcommand("examples", "built-in example systems");
  examples->require_subcommand(1);
  CLI::App* ex_list = examples->add_subcommand("list", "list names and notes");
  add_format(ex_list, cfg);
  CLI::App* ex_show = examples->add_subcommand("show", "print one example's term");
  ex_show->add_option("name", cfg.example)->required();
  add_format(ex_show, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*parse) return cmd_parse(cfg);
    if (*nf_cmd) return cmd_nf(cfg);
    if (*forest) return cmd_forest(cfg);
    if (*tcompat) return cmd_tcompat(cfg);
    if (*check) return cmd_check(cfg);
    if (*infer_cmd) return cmd_infer(cfg);
    if (*explore) return cmd_explore(cfg);
    if (*cover_cmd) return cmd_cover(cfg);
    if (*inv) return cmd_invariance(cfg);
    if (*enc_rn) return cmd_encode_reset(cfg);
    if (*enc_mm) return cmd_encode_minsky(cfg);
    if (*ex_list) return cmd_examples_list(cfg);
    if (*ex_show) return cmd_examples_show(cfg);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    std::cerr << "json error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
