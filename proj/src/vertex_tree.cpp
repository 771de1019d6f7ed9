#include "alleles/vertex_tree.hpp"

#include <charconv>

namespace alleles {

UVertex::UVertex(std::vector<std::uint32_t> path) : path_(std::move(path)) {
  for (auto j : path_) {
    if (j == 0) throw std::invalid_argument("UVertex: entries must be positive");
  }
}

UVertex UVertex::parse(std::string_view text) {
  std::vector<std::uint32_t> path;
  if (!text.empty() && text.front() == '/') text.remove_prefix(1);
  while (!text.empty()) {
    auto slash = text.find('/');
    auto token = text.substr(0, slash);
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || value == 0) {
      throw std::invalid_argument("UVertex: malformed path component '" + std::string(token) + "'");
    }
    path.push_back(value);
    if (slash == std::string_view::npos) break;
    text.remove_prefix(slash + 1);
  }
  return UVertex(std::move(path));
}

UVertex UVertex::child(std::uint32_t j) const {
  if (j == 0) throw std::invalid_argument("UVertex: child index must be positive");
  auto p = path_;
  p.push_back(j);
  return UVertex(std::move(p));
}

UVertex UVertex::parent() const {
  if (path_.empty()) throw std::logic_error("UVertex: root has no parent");
  return UVertex(std::vector<std::uint32_t>(path_.begin(), path_.end() - 1));
}

std::string UVertex::to_string() const {
  if (path_.empty()) return "/";
  std::string out;
  for (auto j : path_) {
    out += '/';
    out += std::to_string(j);
  }
  return out;
}

}  // namespace alleles
