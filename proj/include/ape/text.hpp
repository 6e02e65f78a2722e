#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ape {

/// NFC-normalize, collapse whitespace runs to single spaces, trim.
/// Case is preserved; pair with fold_case() where the caller wants
/// case-insensitive identity.
std::string normalize_text(std::string_view s);

/// Unicode case folding (ICU full fold).
std::string fold_case(std::string_view s);

std::string trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
void replace_all(std::string& s, std::string_view from, std::string_view to);
bool contains(std::string_view haystack, std::string_view needle);

/// Whitespace-delimited word count; the mock backend's token rule.
long count_words(std::string_view s);

/// FNV-1a 64-bit over raw bytes, as a 16-char lowercase hex string.
/// Stable across platforms; used for instruction ids and fingerprints.
std::string fnv1a64_hex(std::string_view bytes);
std::uint64_t fnv1a64(std::string_view bytes);

} // namespace ape
