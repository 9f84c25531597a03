#include "pihier/names.hpp"

#include <stdexcept>

namespace pihier {

NameId Session::intern_free(std::string_view display) {
  auto it = free_by_display_.find(std::string(display));
  if (it != free_by_display_.end()) return it->second;
  NameId id = static_cast<NameId>(name_displays_.size());
  name_displays_.emplace_back(display);
  free_by_display_.emplace(std::string(display), id);
  return id;
}

NameId Session::fresh_name(std::string_view display_hint) {
  NameId id = static_cast<NameId>(name_displays_.size());
  name_displays_.emplace_back(display_hint);
  return id;
}

bool Session::is_interned_free(std::string_view display) const {
  return free_by_display_.count(std::string(display)) != 0;
}

const std::string& Session::display(NameId id) const {
  if (id >= name_displays_.size()) throw std::out_of_range("bad name id");
  return name_displays_[id];
}

BaseId Session::intern_base(std::string_view display) {
  auto it = base_by_display_.find(std::string(display));
  if (it != base_by_display_.end()) return it->second;
  BaseId id = static_cast<BaseId>(base_displays_.size());
  base_displays_.emplace_back(display);
  base_by_display_.emplace(std::string(display), id);
  return id;
}

BaseId Session::fresh_base(std::string_view display_hint) {
  BaseId id = static_cast<BaseId>(base_displays_.size());
  base_displays_.emplace_back(display_hint);
  return id;
}

const std::string& Session::base_display(BaseId id) const {
  if (id >= base_displays_.size()) throw std::out_of_range("bad base id");
  return base_displays_[id];
}

}  // namespace pihier
