#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace qalam {

enum class Language { Arabic, English, Other };
enum class Dialect { MSA, Gulf, Levantine, Egyptian, Other };
enum class Category { Literature, Stem, Creative, Reviews, Legal, Social };
enum class Suite { ArabicMMLU, MadinahQA, AraTrust, ArabicEXAMS, ArbMMLU_HT, ALRAGE, AlGhafa };

inline constexpr std::array kAllCategories = {Category::Literature, Category::Stem,   Category::Creative,
                                              Category::Reviews,    Category::Legal,  Category::Social};
// Table order of the leaderboard columns.
inline constexpr std::array kAllSuites = {Suite::ArabicMMLU, Suite::MadinahQA, Suite::AraTrust,
                                          Suite::ArabicEXAMS, Suite::ArbMMLU_HT, Suite::ALRAGE,
                                          Suite::AlGhafa};

std::string_view to_string(Language v);
std::string_view to_string(Dialect v);
std::string_view to_string(Category v);
std::string_view to_string(Suite v);

// Parsers accept the canonical spelling case-insensitively and return nullopt otherwise.
std::optional<Language> parse_language(std::string_view s);
std::optional<Dialect> parse_dialect(std::string_view s);
std::optional<Category> parse_category(std::string_view s);
std::optional<Suite> parse_suite(std::string_view s);

struct Document {
  std::string id;
  std::string text;
  Language language = Language::Other;
  std::optional<Dialect> dialect;
  Category category = Category::Literature;
  std::string source;
  std::uint64_t token_count = 0;
  // Fields not known to this version, carried through untouched.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const Document&) const = default;
};

struct BenchmarkItem {
  Suite suite = Suite::ArabicMMLU;
  std::string task_id;
  std::string question;
  std::vector<std::string> options;
  int gold_index = 0;
  std::optional<std::string> context;
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const BenchmarkItem&) const = default;
};

// Throws InvariantViolation naming the field. Checks that do not depend on
// the rest of the corpus (id uniqueness is checked by the reader).
void validate(const Document& doc);
void validate(const BenchmarkItem& item);

// Option label used in prompts and answers: 0 -> 'A'.
char option_letter(std::size_t index);

// Arabic abjad-order option labels (أ ب ج د ...).
std::string_view arabic_option_letter(std::size_t index);
inline constexpr std::size_t kMaxOptions = 26;

}  // namespace qalam
