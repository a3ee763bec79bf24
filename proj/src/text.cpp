#include "ctxguard/text.hpp"

#include "ctxguard/errors.hpp"
#include "embedded_data.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace ctxguard {

namespace {

bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return is_lower(c) || is_upper(c) || is_digit(c); }

} // namespace

std::vector<std::string> split_identifier(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty())
      out.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (!is_alnum(c)) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      const char prev = s[i - 1];
      const bool next_lower = i + 1 < s.size() && is_lower(s[i + 1]);
      if ((is_digit(c) != is_digit(prev)) ||
          (is_upper(c) && is_lower(prev)) ||
          (is_upper(c) && is_upper(prev) && next_lower))
        flush();
    }
    cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  flush();
  return out;
}

namespace {

// Porter stemmer over a lowercase word.
class Porter {
public:
  explicit Porter(std::string w) : w_(std::move(w)) {}

  std::string run() {
    step1a();
    step1b();
    step1c();
    step2();
    step3();
    step4();
    step5a();
    step5b();
    return w_;
  }

private:
  struct Rule {
    std::string_view suffix;
    std::string_view replacement;
    int min_measure; // condition: measure(stem) > min_measure
  };

  static bool vowel_letter(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  }

  static std::vector<bool> consonant_flags(std::string_view s) {
    std::vector<bool> f(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (vowel_letter(s[i]))
        f[i] = false;
      else if (s[i] == 'y')
        f[i] = i == 0 ? true : !f[i - 1];
      else
        f[i] = true;
    }
    return f;
  }

  static int measure(std::string_view s) {
    auto f = consonant_flags(s);
    int m = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
      if (!f[i - 1] && f[i])
        ++m;
    return m;
  }

  static bool contains_vowel(std::string_view s) {
    auto f = consonant_flags(s);
    return std::find(f.begin(), f.end(), false) != f.end();
  }

  static bool ends_double_consonant(std::string_view s) {
    if (s.size() < 2 || s[s.size() - 1] != s[s.size() - 2])
      return false;
    return consonant_flags(s).back();
  }

  static bool ends_cvc(std::string_view s) {
    if (s.size() < 3)
      return false;
    auto f = consonant_flags(s);
    const std::size_t n = s.size();
    const char last = s[n - 1];
    return f[n - 3] && !f[n - 2] && f[n - 1] && last != 'w' && last != 'x' &&
           last != 'y';
  }

  bool ends_with(std::string_view suffix) const {
    return w_.size() >= suffix.size() &&
           std::string_view(w_).substr(w_.size() - suffix.size()) == suffix;
  }

  std::string_view stem_without(std::string_view suffix) const {
    return std::string_view(w_).substr(0, w_.size() - suffix.size());
  }

  // First rule whose suffix matches decides, whether or not its condition
  // holds.
  void apply(std::initializer_list<Rule> rules) {
    for (const auto &r : rules) {
      if (!ends_with(r.suffix))
        continue;
      std::string stem(stem_without(r.suffix));
      if (measure(stem) > r.min_measure)
        w_ = stem + std::string(r.replacement);
      return;
    }
  }

  void step1a() {
    if (ends_with("sses"))
      w_.resize(w_.size() - 2);
    else if (ends_with("ies"))
      w_.resize(w_.size() - 2);
    else if (ends_with("ss"))
      return;
    else if (ends_with("s"))
      w_.pop_back();
  }

  void step1b() {
    if (ends_with("eed")) {
      if (measure(stem_without("eed")) > 0)
        w_.pop_back();
      return;
    }
    std::string stem;
    if (ends_with("ed") && contains_vowel(stem_without("ed")))
      stem = stem_without("ed");
    else if (ends_with("ing") && contains_vowel(stem_without("ing")))
      stem = stem_without("ing");
    else
      return;
    w_ = stem;
    if (ends_with("at") || ends_with("bl") || ends_with("iz")) {
      w_ += 'e';
    } else if (ends_double_consonant(w_)) {
      const char last = w_.back();
      if (last != 'l' && last != 's' && last != 'z')
        w_.pop_back();
    } else if (measure(w_) == 1 && ends_cvc(w_)) {
      w_ += 'e';
    }
  }

  void step1c() {
    if (ends_with("y") && contains_vowel(stem_without("y")))
      w_.back() = 'i';
  }

  void step2() {
    apply({{"ational", "ate", 0}, {"tional", "tion", 0}, {"enci", "ence", 0},
           {"anci", "ance", 0},   {"izer", "ize", 0},    {"abli", "able", 0},
           {"alli", "al", 0},     {"entli", "ent", 0},   {"eli", "e", 0},
           {"ousli", "ous", 0},   {"ization", "ize", 0}, {"ation", "ate", 0},
           {"ator", "ate", 0},    {"alism", "al", 0},    {"iveness", "ive", 0},
           {"fulness", "ful", 0}, {"ousness", "ous", 0}, {"aliti", "al", 0},
           {"iviti", "ive", 0},   {"biliti", "ble", 0}});
  }

  void step3() {
    apply({{"icate", "ic", 0},
           {"ative", "", 0},
           {"alize", "al", 0},
           {"iciti", "ic", 0},
           {"ical", "ic", 0},
           {"ful", "", 0},
           {"ness", "", 0}});
  }

  void step4() {
    static constexpr std::string_view suffixes[] = {
        "al",  "ance", "ence", "er",  "ic",  "able", "ible",
        "ant", "ement", "ment", "ent", "ion", "ou",  "ism",
        "ate", "iti",  "ous",  "ive", "ize"};
    for (auto suffix : suffixes) {
      if (!ends_with(suffix))
        continue;
      std::string_view stem = stem_without(suffix);
      bool ok = measure(stem) > 1;
      if (suffix == "ion")
        ok = ok && !stem.empty() && (stem.back() == 's' || stem.back() == 't');
      if (ok)
        w_.resize(stem.size());
      return;
    }
  }

  void step5a() {
    if (!ends_with("e"))
      return;
    std::string_view stem = stem_without("e");
    const int m = measure(stem);
    if (m > 1 || (m == 1 && !ends_cvc(stem)))
      w_.pop_back();
  }

  void step5b() {
    if (ends_with("ll") && measure(stem_without("l")) > 1)
      w_.pop_back();
  }

  std::string w_;
};

} // namespace

std::string porter_stem(std::string_view token) {
  if (token.empty() ||
      !std::all_of(token.begin(), token.end(), [](char c) { return is_lower(c); }))
    return std::string(token);
  return Porter(std::string(token)).run();
}

Stopwords Stopwords::parse(std::string_view text) {
  Stopwords sw;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos)
      continue;
    auto e = line.find_last_not_of(" \t\r");
    std::string word = line.substr(b, e - b + 1);
    if (word.front() == '#') {
      constexpr std::string_view key = "version:";
      if (auto k = word.find(key); k != std::string::npos && sw.version_.empty()) {
        auto v = word.substr(k + key.size());
        v.erase(0, v.find_first_not_of(' '));
        sw.version_ = v;
      }
      continue;
    }
    std::transform(word.begin(), word.end(), word.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    sw.words_.insert(word);
  }
  if (sw.version_.empty())
    throw ValidationError("stopword file has no '# version:' header");
  if (sw.words_.empty())
    throw ValidationError("stopword file is empty");
  return sw;
}

const Stopwords &Stopwords::english() {
  static const Stopwords sw = parse(embedded::kStopwordsEn);
  return sw;
}

std::vector<std::string> text_tokens(std::string_view text,
                                     const Stopwords &stopwords) {
  std::vector<std::string> out;
  for (auto &tok : split_identifier(text)) {
    if (stopwords.contains(tok))
      continue;
    const bool has_digit =
        std::any_of(tok.begin(), tok.end(), [](char c) { return is_digit(c); });
    out.push_back(has_digit ? std::move(tok) : porter_stem(tok));
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string_view to_string(FeatureSet s) {
  switch (s) {
  case FeatureSet::Who:
    return "who";
  case FeatureSet::When:
    return "when";
  case FeatureSet::What:
    return "what";
  }
  return "?";
}

std::uint32_t hash_token(FeatureSet set, std::string_view token) {
  std::string preimage(to_string(set));
  preimage += ':';
  preimage += token;
  return static_cast<std::uint32_t>(fnv1a64(preimage) % kHashSpace);
}

} // namespace ctxguard
