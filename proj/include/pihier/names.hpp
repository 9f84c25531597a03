#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pihier {

// Process names and base types are interned ids; the display string is kept
// only for parsing and printing.  Binders get a fresh id per occurrence, so
// name-uniqueness holds by construction even when the source reuses an
// identifier.  Free names are keyed by display: the same identifier always
// denotes the same channel across one session.
using NameId = std::uint32_t;
using BaseId = std::uint32_t;

inline constexpr NameId no_name = 0xffffffffu;
inline constexpr BaseId no_base = 0xffffffffu;

class Session {
 public:
  NameId intern_free(std::string_view display);
  NameId fresh_name(std::string_view display_hint);
  bool is_interned_free(std::string_view display) const;
  const std::string& display(NameId id) const;
  std::size_t name_count() const { return name_displays_.size(); }

  BaseId intern_base(std::string_view display);
  BaseId fresh_base(std::string_view display_hint);
  const std::string& base_display(BaseId id) const;
  std::size_t base_count() const { return base_displays_.size(); }

 private:
  std::vector<std::string> name_displays_;
  std::unordered_map<std::string, NameId> free_by_display_;
  std::vector<std::string> base_displays_;
  std::unordered_map<std::string, BaseId> base_by_display_;
};

}  // namespace pihier
