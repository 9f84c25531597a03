#include "pihier/hierarchy.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace pihier {

void Hierarchy::add_base(BaseId b) { up_.emplace(b, no_base); }

void Hierarchy::add_edge(BaseId parent, BaseId child) {
  if (parent == child) throw std::runtime_error("hierarchy edge introduces a cycle");
  add_base(parent);
  auto it = up_.find(child);
  if (it == up_.end()) {
    up_[child] = parent;
  } else if (it->second == no_base) {
    if (lt(child, parent))  // child is already somewhere above parent
      throw std::runtime_error("hierarchy edge introduces a cycle");
    it->second = parent;
  } else if (it->second != parent) {
    throw std::runtime_error("base already has a different predecessor");
  }
}

std::optional<BaseId> Hierarchy::parent(BaseId b) const {
  auto it = up_.find(b);
  if (it == up_.end() || it->second == no_base) return std::nullopt;
  return it->second;
}

bool Hierarchy::lt(BaseId a, BaseId b) const {
  auto it = up_.find(b);
  std::size_t steps = 0;
  while (it != up_.end() && it->second != no_base) {
    if (it->second == a) return true;
    it = up_.find(it->second);
    if (++steps > up_.size() + 1) break;  // defensive, cycles are rejected on insert
  }
  return false;
}

std::vector<BaseId> Hierarchy::minimal_of(const std::set<BaseId>& s) const {
  std::vector<BaseId> out;
  for (BaseId a : s) {
    bool minimal = true;
    for (BaseId b : s)
      if (b != a && lt(b, a)) {
        minimal = false;
        break;
      }
    if (minimal) out.push_back(a);
  }
  return out;
}

std::optional<BaseId> Hierarchy::min_of(const std::set<BaseId>& s) const {
  if (s.empty()) return std::nullopt;
  for (BaseId a : s) {
    bool below_all = true;
    for (BaseId b : s)
      if (b != a && !lt(a, b)) {
        below_all = false;
        break;
      }
    if (below_all) return a;
  }
  return std::nullopt;
}

std::vector<BaseId> Hierarchy::bases() const {
  std::vector<BaseId> out;
  for (auto& [b, p] : up_) out.push_back(b);
  return out;
}

std::vector<BaseId> Hierarchy::roots() const {
  std::vector<BaseId> out;
  for (auto& [b, p] : up_)
    if (p == no_base) out.push_back(b);
  return out;
}

Hierarchy Hierarchy::chain(const std::vector<BaseId>& low_to_high) {
  Hierarchy h;
  for (std::size_t i = 0; i < low_to_high.size(); ++i) {
    h.add_base(low_to_high[i]);
    if (i + 1 < low_to_high.size()) h.add_edge(low_to_high[i], low_to_high[i + 1]);
  }
  return h;
}

Hierarchy parse_hierarchy(Session& s, const std::string& text) {
  Hierarchy h;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::vector<std::string> parts;
    std::string cur;
    for (char c : line) {
      if (c == '<') {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    parts.push_back(cur);
    auto trim = [](std::string v) {
      auto a = v.find_first_not_of(" \t\r");
      auto b = v.find_last_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      return v.substr(a, b - a + 1);
    };
    std::vector<BaseId> ids;
    bool blank = false;
    for (auto& p : parts) {
      std::string name = trim(p);
      if (name.empty()) {
        blank = true;
        continue;
      }
      ids.push_back(s.intern_base(name));
    }
    if (blank && !ids.empty())
      throw std::runtime_error("malformed hierarchy line: " + line);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      h.add_base(ids[i]);
      if (i + 1 < ids.size()) h.add_edge(ids[i], ids[i + 1]);
    }
  }
  return h;
}

std::string hierarchy_to_text(const Session& s, const Hierarchy& h) {
  // One line per maximal root-to-leaf path, so chains print on one line.
  // Shared prefixes repeat, which keeps the format dumb and re-parseable.
  std::set<BaseId> has_child;
  for (BaseId b : h.bases())
    if (auto p = h.parent(b)) has_child.insert(*p);
  std::vector<std::string> lines;
  for (BaseId b : h.bases()) {
    if (has_child.count(b)) continue;  // not a leaf
    std::vector<BaseId> path{b};
    BaseId cur = b;
    while (auto p = h.parent(cur)) {
      path.push_back(*p);
      cur = *p;
    }
    std::string line;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      if (!line.empty()) line += " < ";
      line += s.base_display(*it);
    }
    lines.push_back(line);
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (auto& l : lines) out += l + "\n";
  return out;
}

TypeEnv parse_env(Session& s, const std::string& text) {
  TypeEnv env;
  std::string item;
  auto flush = [&](const std::string& entry) {
    auto a = entry.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return;
    auto colon = entry.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("environment entry needs 'name : type': " + entry);
    auto trim = [](std::string v) {
      auto x = v.find_first_not_of(" \t\r\n");
      auto y = v.find_last_not_of(" \t\r\n");
      if (x == std::string::npos) return std::string();
      return v.substr(x, y - x + 1);
    };
    std::string name = trim(entry.substr(0, colon));
    std::string ty = trim(entry.substr(colon + 1));
    if (name.empty() || ty.empty())
      throw std::runtime_error("environment entry needs 'name : type': " + entry);
    env[s.intern_free(name)] = parse_type(s, ty);
  };
  for (char c : text) {
    if (c == ',' || c == '\n') {
      flush(item);
      item.clear();
    } else {
      item += c;
    }
  }
  flush(item);
  return env;
}

std::string env_to_text(const Session& s, const TypeEnv& env) {
  std::vector<std::string> items;
  for (auto& [n, t] : env)
    items.push_back(s.display(n) + " : " + type_to_string(s, t));
  std::sort(items.begin(), items.end());
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out;
}

void collect_bases(const TypeExprPtr& t, std::set<BaseId>& out) {
  if (!t) return;
  out.insert(t->base);
  collect_bases(t->payload, out);
}

std::set<BaseId> annotation_bases(const TermPtr& t) {
  std::set<BaseId> out;
  switch (t->kind) {
    case TermKind::Nil:
      break;
    case TermKind::Restrict:
      collect_bases(t->annot, out);
      {
        auto sub = annotation_bases(t->body);
        out.insert(sub.begin(), sub.end());
      }
      break;
    case TermKind::Par:
      for (auto& p : t->parts) {
        auto sub = annotation_bases(p);
        out.insert(sub.begin(), sub.end());
      }
      break;
    case TermKind::Choice:
    case TermKind::Repl:
      for (auto& b : t->branches) {
        auto sub = annotation_bases(b.cont);
        out.insert(sub.begin(), sub.end());
      }
      break;
  }
  return out;
}

bool p_safe(const Session& s, const Hierarchy& h, const TypeEnv& env,
            const TermPtr& t, std::string* why) {
  auto restr = restriction_names(t);
  for (NameId x : free_names(t)) {
    auto it = env.find(x);
    if (it == env.end()) {
      if (why) *why = "free name " + s.display(x) + " is missing from the environment";
      return false;
    }
    for (auto& [y, annot] : restr) {
      if (!annot) continue;
      if (!h.lt(it->second->base, annot->base)) {
        if (why)
          *why = "base " + s.base_display(it->second->base) + " of free name " +
                 s.display(x) + " is not below base " + s.base_display(annot->base) +
                 " of the restriction binding " + s.display(y);
        return false;
      }
    }
  }
  return true;
}

}  // namespace pihier
