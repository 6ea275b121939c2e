#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace qalam {

// Pluggable token accounting. All token budgets in the library are
// interpreted under whichever tokenizer is configured.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  virtual std::size_t count(std::string_view text) const { return tokenize(text).size(); }
  virtual std::string name() const = 0;
};

// Splits on Unicode whitespace; every punctuation code point is a token of
// its own. "a, b" -> {"a", ",", "b"}.
class WhitespacePunctTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::size_t count(std::string_view text) const override;
  std::string name() const override { return "whitespace-punct/1"; }
};

const Tokenizer& default_tokenizer();

inline std::size_t count_tokens(std::string_view text, const Tokenizer& tokenizer = default_tokenizer()) {
  return tokenizer.count(text);
}

}  // namespace qalam
