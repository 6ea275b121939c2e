#include "qalam/types.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "qalam/error.hpp"
#include "qalam/normalize.hpp"

namespace qalam {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view s, const std::array<Enum, N>& values) {
  for (Enum v : values) {
    if (iequals(s, to_string(v))) return v;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Language v) {
  switch (v) {
    case Language::Arabic: return "Arabic";
    case Language::English: return "English";
    case Language::Other: return "Other";
  }
  return "Other";
}

std::string_view to_string(Dialect v) {
  switch (v) {
    case Dialect::MSA: return "MSA";
    case Dialect::Gulf: return "Gulf";
    case Dialect::Levantine: return "Levantine";
    case Dialect::Egyptian: return "Egyptian";
    case Dialect::Other: return "Other";
  }
  return "Other";
}

std::string_view to_string(Category v) {
  switch (v) {
    case Category::Literature: return "Literature";
    case Category::Stem: return "Stem";
    case Category::Creative: return "Creative";
    case Category::Reviews: return "Reviews";
    case Category::Legal: return "Legal";
    case Category::Social: return "Social";
  }
  return "Literature";
}

std::string_view to_string(Suite v) {
  switch (v) {
    case Suite::ArabicMMLU: return "ArabicMMLU";
    case Suite::MadinahQA: return "MadinahQA";
    case Suite::AraTrust: return "AraTrust";
    case Suite::ArabicEXAMS: return "ArabicEXAMS";
    case Suite::ArbMMLU_HT: return "ArbMMLU_HT";
    case Suite::ALRAGE: return "ALRAGE";
    case Suite::AlGhafa: return "AlGhafa";
  }
  return "ArabicMMLU";
}

std::optional<Language> parse_language(std::string_view s) {
  return parse_enum(s, std::array{Language::Arabic, Language::English, Language::Other});
}

std::optional<Dialect> parse_dialect(std::string_view s) {
  return parse_enum(s, std::array{Dialect::MSA, Dialect::Gulf, Dialect::Levantine, Dialect::Egyptian, Dialect::Other});
}

std::optional<Category> parse_category(std::string_view s) { return parse_enum(s, kAllCategories); }

std::optional<Suite> parse_suite(std::string_view s) {
  if (iequals(s, "ArbMMLU-HT")) return Suite::ArbMMLU_HT;
  return parse_enum(s, kAllSuites);
}

void validate(const Document& doc) {
  if (doc.id.empty()) throw InvariantViolation("id", "must be non-empty");
  if (doc.dialect && doc.language != Language::Arabic) {
    throw InvariantViolation("dialect", "only allowed when language is Arabic");
  }
}

void validate(const BenchmarkItem& item) {
  if (item.options.size() < 2) throw InvariantViolation("options", "at least two options required");
  if (item.options.size() > kMaxOptions) {
    throw InvariantViolation("options", "at most " + std::to_string(kMaxOptions) + " options supported");
  }
  if (item.gold_index < 0 || static_cast<std::size_t>(item.gold_index) >= item.options.size()) {
    throw InvariantViolation("gold_index", "must satisfy 0 <= gold_index < " + std::to_string(item.options.size()) +
                                               " (got " + std::to_string(item.gold_index) + ")");
  }
  std::set<std::string> seen;
  for (const auto& option : item.options) {
    if (!seen.insert(canonicalize(option)).second) {
      throw InvariantViolation("options", "options must be pairwise distinct after normalization");
    }
  }
}

char option_letter(std::size_t index) { return static_cast<char>('A' + index); }

std::string_view arabic_option_letter(std::size_t index) {
  static constexpr std::array<std::string_view, kMaxOptions> kLetters = {
      "أ", "ب", "ج", "د", "ه", "و", "ز", "ح", "ط", "ي", "ك", "ل", "م",
      "ن", "س", "ع", "ف", "ص", "ق", "ر", "ش", "ت", "ث", "خ", "ذ", "ض"};
  return index < kLetters.size() ? kLetters[index] : std::string_view{};
}

}  // namespace qalam
