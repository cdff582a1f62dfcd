#pragma once

#include <string>
#include <string_view>

namespace mediaflow::url {

// Lowercased host with any scheme, userinfo, port, path, query, fragment and
// a leading "www." removed. Returns "" when no host can be extracted.
std::string normalized_host(std::string_view url);

// Registrable domain (eTLD+1) of a URL or bare host: "edition.cnn.com" ->
// "cnn.com", "news.bbc.co.uk" -> "bbc.co.uk". Uses an embedded table of
// common multi-label public suffixes; unknown suffixes fall back to the last
// two labels. Returns "" for empty/invalid hosts.
std::string registrable_domain(std::string_view url_or_host);

// Registrable-domain equality of two URLs.
bool same_registrable_domain(std::string_view url_a, std::string_view url_b);

}  // namespace mediaflow::url
