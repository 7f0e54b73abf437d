#pragma once

#include <string>
#include <string_view>
#include <utility>

#include "piscan/error.hpp"

namespace piscan::detail {

// "http://host:port/path" -> {"http://host:port", "/path"}.
inline std::pair<std::string, std::string> split_http_url(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme) {
    throw ArgumentError("endpoint must be an http:// URL: " + std::string(url));
  }
  const auto slash = url.find('/', scheme.size());
  if (slash == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

}  // namespace piscan::detail
