#include "mediaflow/url.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <vector>

namespace mediaflow::url {

namespace {

// Multi-label public suffixes we are likely to meet in a media registry.
// Not the full PSL; unknown suffixes fall back to the last-two-labels rule.
constexpr std::array<std::string_view, 30> kTwoLabelSuffixes = {
    "co.uk",  "org.uk", "gov.uk", "ac.uk",  "net.uk", "me.uk",
    "com.au", "net.au", "org.au", "gov.au", "edu.au", "co.nz",
    "org.nz", "net.nz", "govt.nz", "co.za",  "org.za", "co.in",
    "net.in", "org.in", "co.jp",  "or.jp",  "ne.jp",  "com.br",
    "org.br", "com.mx", "com.ar", "com.sg", "com.pk", "co.kr",
};

bool is_two_label_suffix(std::string_view s) {
  return std::find(kTwoLabelSuffixes.begin(), kTwoLabelSuffixes.end(), s) !=
         kTwoLabelSuffixes.end();
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string normalized_host(std::string_view url) {
  std::string_view rest = url;
  // strip scheme
  if (auto pos = rest.find("://"); pos != std::string_view::npos) {
    rest.remove_prefix(pos + 3);
  } else if (rest.starts_with("//")) {
    rest.remove_prefix(2);
  }
  // strip path/query/fragment
  if (auto pos = rest.find_first_of("/?#"); pos != std::string_view::npos) {
    rest = rest.substr(0, pos);
  }
  // strip userinfo
  if (auto pos = rest.rfind('@'); pos != std::string_view::npos) {
    rest.remove_prefix(pos + 1);
  }
  // strip port
  if (auto pos = rest.find(':'); pos != std::string_view::npos) {
    rest = rest.substr(0, pos);
  }
  while (!rest.empty() && rest.back() == '.') rest.remove_suffix(1);
  std::string host = to_lower(rest);
  if (host.starts_with("www.")) host.erase(0, 4);
  return host;
}

std::string registrable_domain(std::string_view url_or_host) {
  std::string host = normalized_host(url_or_host);
  if (host.empty()) return {};

  std::vector<std::string_view> labels;
  std::string_view view = host;
  while (!view.empty()) {
    auto pos = view.find('.');
    if (pos == std::string_view::npos) {
      labels.push_back(view);
      break;
    }
    labels.push_back(view.substr(0, pos));
    view.remove_prefix(pos + 1);
  }
  if (labels.size() <= 2) return host;

  auto join_last = [&](std::size_t n) {
    std::string out;
    for (std::size_t i = labels.size() - n; i < labels.size(); ++i) {
      if (!out.empty()) out.push_back('.');
      out += std::string(labels[i]);
    }
    return out;
  };

  std::string last_two = join_last(2);
  if (is_two_label_suffix(last_two)) return join_last(3);
  return last_two;
}

bool same_registrable_domain(std::string_view url_a, std::string_view url_b) {
  std::string a = registrable_domain(url_a);
  return !a.empty() && a == registrable_domain(url_b);
}

}  // namespace mediaflow::url
