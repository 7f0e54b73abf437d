#include "piscan/parrot.hpp"

#include <json.hpp>

#include "piscan/error.hpp"
#include "piscan/levenshtein.hpp"
#include "piscan/text.hpp"

namespace piscan {

ParrotScore parrot_score(std::string_view candidate, std::string_view truth) {
  if (truth.empty()) throw ArgumentError("parrot_score: ground truth must be nonempty");
  const std::u32string t = utf8::decode(truth);
  const std::u32string c = utf8::decode(candidate);
  const std::size_t m = t.size();

  ParrotScore out;
  if (c.size() > m) {
    const PatternDistance matcher(t);
    const std::u32string_view cv(c);
    std::size_t best = m + 1;
    for (std::size_t off = 0; off + m <= c.size(); ++off) {
      const std::size_t d = matcher.distance(cv.substr(off, m));
      if (d < best) {
        best = d;
        out.window_offset = off;
        if (d == 0) break;
      }
    }
    out.distance = best;
  } else {
    out.distance = levenshtein(c, t);
  }
  out.score = 1.0 - static_cast<double>(out.distance) / static_cast<double>(m);
  return out;
}

std::vector<std::string> constituent_names(PiType type) {
  switch (type) {
    case PiType::Email: return {"username", "domain"};
    case PiType::IpAddress: return {"grp1", "grp2", "grp3", "grp4"};
    case PiType::PhoneNumber:
    case PiType::PhoneNumberPlusOne: return {"area_code", "rest"};
  }
  return {};
}

std::vector<std::string> split_constituents(PiType type, std::string_view s) {
  switch (type) {
    case PiType::Email: {
      const auto at = s.find('@');
      if (at == std::string_view::npos) return {std::string(s), ""};
      return {std::string(s.substr(0, at)), std::string(s.substr(at + 1))};
    }
    case PiType::IpAddress: {
      std::vector<std::string> groups;
      std::size_t pos = 0;
      for (int i = 0; i < 3; ++i) {
        const auto dot = s.find('.', pos);
        if (dot == std::string_view::npos) break;
        groups.emplace_back(s.substr(pos, dot - pos));
        pos = dot + 1;
      }
      groups.emplace_back(s.substr(std::min(pos, s.size())));
      groups.resize(4);
      return groups;
    }
    case PiType::PhoneNumber:
    case PiType::PhoneNumberPlusOne: {
      std::string digits = normalize_digits(s);
      if (digits.size() == 11 && digits.front() == '1') digits.erase(0, 1);
      if (digits.size() < 3) return {digits, ""};
      return {digits.substr(0, 3), digits.substr(3)};
    }
  }
  return {};
}

std::vector<bool> constituent_verbatim(std::string_view candidate, std::string_view truth, PiType type) {
  if (truth.empty()) throw ArgumentError("constituent_verbatim: ground truth must be nonempty");
  if (type == PiType::IpAddress && truth.find(':') != std::string_view::npos) return {};
  const auto c = split_constituents(type, candidate);
  const auto t = split_constituents(type, truth);
  std::vector<bool> flags(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) flags[i] = i < c.size() && c[i] == t[i];
  return flags;
}

double verbatim_rate(std::span<const ParrotResult> results) {
  if (results.empty()) throw ArgumentError("verbatim_rate of an empty result list");
  std::size_t n = 0;
  for (const auto& r : results) n += r.verbatim ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(results.size());
}

std::vector<double> constituent_rates(std::span<const ParrotResult> results) {
  if (results.empty()) throw ArgumentError("constituent_rates of an empty result list");
  const PiType type = results.front().pi_type;
  const std::size_t groups = constituent_names(type).size();
  std::vector<std::size_t> hits(groups, 0);
  std::size_t counted = 0;
  for (const auto& r : results) {
    if (r.pi_type != type) throw ArgumentError("constituent_rates needs results of a single pi_type");
    if (r.constituents.empty()) continue;
    if (r.constituents.size() != groups) throw ArgumentError("constituent_rates: inconsistent group count");
    ++counted;
    for (std::size_t g = 0; g < groups; ++g) hits[g] += r.constituents[g] ? 1 : 0;
  }
  std::vector<double> rates(groups, 0.0);
  if (counted == 0) return rates;
  for (std::size_t g = 0; g < groups; ++g) {
    rates[g] = static_cast<double>(hits[g]) / static_cast<double>(counted);
  }
  return rates;
}

std::string parrot_result_to_json(const ParrotResult& r) {
  nlohmann::ordered_json j;
  j["instance_id"] = r.instance_id;
  j["pi_type"] = std::string(to_string(r.pi_type));
  j["score"] = r.score;
  j["verbatim"] = r.verbatim;
  nlohmann::ordered_json groups = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.constituents.size(); ++i) {
    groups.push_back({{"group", i}, {"verbatim", static_cast<bool>(r.constituents[i])}});
  }
  j["constituents"] = std::move(groups);
  j["best_window_offset"] = r.best_window_offset ? nlohmann::ordered_json(*r.best_window_offset) : nullptr;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

ParrotResult parrot_result_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    ParrotResult r;
    r.instance_id = j.at("instance_id").get<std::string>();
    auto type = parse_pi_type(j.at("pi_type").get<std::string>());
    if (!type) throw FormatError("unknown pi_type in parrot result");
    r.pi_type = *type;
    r.score = j.at("score").get<double>();
    r.verbatim = j.at("verbatim").get<bool>();
    for (const auto& g : j.at("constituents")) r.constituents.push_back(g.at("verbatim").get<bool>());
    if (!j.at("best_window_offset").is_null()) r.best_window_offset = j["best_window_offset"].get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed parrot result: ") + e.what());
  }
}

}  // namespace piscan
