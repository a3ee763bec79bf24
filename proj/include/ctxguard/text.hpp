#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ctxguard {

/// Splits identifiers and free text into lowercase tokens: breaks on every
/// non-alphanumeric character, on lower->upper camelCase boundaries, before
/// the last capital of an acronym run ("HTTPServer" -> http, server), and
/// between letters and digits. Empty tokens are dropped.
std::vector<std::string> split_identifier(std::string_view s);

/// Porter (1980) suffix-stripping stemmer, as published (no length guard,
/// no later extensions). Input must be lowercase ASCII letters; other input
/// is returned unchanged.
std::string porter_stem(std::string_view token);

class Stopwords {
public:
  /// File format: first non-empty line `# version: <v>`, then one word per
  /// line; '#' lines are comments. Throws ValidationError when empty or
  /// unversioned.
  static Stopwords parse(std::string_view text);
  /// The shipped English list (data/stopwords_en.txt).
  static const Stopwords &english();

  bool contains(std::string_view token) const {
    return words_.count(std::string(token)) > 0;
  }
  std::size_t size() const { return words_.size(); }
  const std::string &version() const { return version_; }

private:
  std::set<std::string> words_;
  std::string version_;
};

/// split -> stopword filter -> stem. Tokens containing digits are kept
/// verbatim (not stemmed).
std::vector<std::string> text_tokens(std::string_view text,
                                     const Stopwords &stopwords);

std::uint64_t fnv1a64(std::string_view bytes);

enum class FeatureSet { Who, When, What };
std::string_view to_string(FeatureSet s);

inline constexpr std::uint32_t kHashSpace = 65536;

/// FNV-1a 64 over "<tag>:<token>", reduced modulo 2^16.
std::uint32_t hash_token(FeatureSet set, std::string_view token);

} // namespace ctxguard
