#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "labelforge/ingest.h"

namespace labelforge {

struct Token {
  std::string surface;
  bool negated = false;

  auto operator<=>(const Token&) const = default;
  bool operator==(const Token&) const = default;
};

using TokenSeq = std::vector<Token>;

// Where a normalized sentence came from. Image ids are copied from the
// owning report so downstream support counting needs no corpus lookup.
struct SourceRef {
  std::string report_id;
  std::size_t index_in_section = 0;
  std::vector<std::string> image_ids;

  bool operator==(const SourceRef&) const = default;
};

struct NormalizedSentence {
  TokenSeq tokens;
  SectionKind section;
  std::vector<SourceRef> sources;
  std::size_t frequency = 1;

  // Token surfaces joined by single spaces; the clustering sort key.
  std::string Key() const;
  // Readable rendering: each negated run is prefixed by "no" and closed with
  // a comma, so re-normalizing it with the default triggers gives back the
  // same tokens.
  std::string Surface() const;

  bool operator==(const NormalizedSentence&) const = default;
};

struct NormalizationConfig {
  std::set<std::string> stopwords;
  std::map<std::string, std::vector<std::string>> abbreviations;
  std::set<std::string> negation_triggers;
  std::set<std::string> negation_scope_terminators;
  bool typo_folding = false;
  std::size_t typo_min_vocab_freq = 20;

  // Default stopword list, default triggers/terminators, no abbreviations,
  // typo folding off.
  static NormalizationConfig Default();
  // Everything empty and off: normalization is plain lowercase tokenizing.
  static NormalizationConfig Bare();

  // Throws kInvalidConfig on an empty expansion or a trigger that is also a
  // stopword.
  void Validate() const;
};

const std::vector<std::string>& DefaultStopwords();

// One word per line, '#' starts a comment.
std::set<std::string> LoadStopwordFile(const std::filesystem::path& path);
std::set<std::string> ParseStopwords(std::istream& in);
// "abbrev<TAB>expansion words" per line.
std::map<std::string, std::vector<std::string>> LoadAbbreviationFile(
    const std::filesystem::path& path);
std::map<std::string, std::vector<std::string>> ParseAbbreviations(
    std::istream& in);

// Reads a norm.toml. Relative file paths resolve against the toml's folder.
// Keys: stopwords_file, stopwords (array), abbreviations_file,
// negation_triggers, negation_terminators, typo_folding, typo_min_vocab_freq.
NormalizationConfig LoadNormalizationConfig(const std::filesystem::path& path);

// Tokens plus a flag per token marking a punctuation boundary before it.
// Negation scope ends at such a boundary.
struct TokenizedText {
  TokenSeq tokens;
  std::vector<bool> clause_start;
};

TokenizedText TokenizeWithBoundaries(std::string_view raw);
TokenSeq Tokenize(std::string_view raw);

TokenSeq ExpandAbbreviations(const TokenSeq& tokens,
                             const NormalizationConfig& config);
TokenizedText ExpandAbbreviations(const TokenizedText& text,
                                  const NormalizationConfig& config);

TokenSeq TagNegations(const TokenSeq& tokens, const NormalizationConfig& config);
TokenSeq TagNegations(const TokenizedText& text,
                      const NormalizationConfig& config);

using Vocabulary = std::unordered_map<std::string, std::size_t>;

// Counts every token after tokenizing and abbreviation expansion.
Vocabulary BuildVocabulary(const std::vector<RawSentence>& sentences,
                           const NormalizationConfig& config);

// Edit-distance-1 folding of rare words onto a unique frequent neighbour.
class TypoFolder {
 public:
  TypoFolder(const Vocabulary& vocabulary, std::size_t min_freq);

  // Returns the replacement, or `word` itself when it is frequent enough or
  // has zero or several frequent neighbours.
  std::string Fold(const std::string& word) const;

 private:
  std::string Lookup(const std::string& word) const;

  const Vocabulary* vocabulary_;
  std::size_t min_freq_;
  std::unordered_map<std::size_t, std::vector<std::string>> frequent_by_len_;
  std::unordered_map<std::string, std::string> folded_;
};

// tokenize -> expand -> negation tagging -> stopword removal -> typo folding.
// Throws kEmptySentenceAfterNormalization when nothing survives.
TokenSeq NormalizeText(std::string_view text, const NormalizationConfig& config,
                       const TypoFolder* folder = nullptr);

NormalizedSentence NormalizeSentence(const RawSentence& raw,
                                     const NormalizationConfig& config,
                                     const Vocabulary& vocabulary);

// Merges sentences with equal (section, tokens); frequencies and sources
// accumulate. Output keeps first-occurrence order.
std::vector<NormalizedSentence> DedupCorpus(
    std::vector<NormalizedSentence> sentences);

struct NormalizedCorpus {
  std::vector<NormalizedSentence> sentences;  // deduplicated
  std::size_t raw_sentences = 0;
  std::size_t dropped_sentences = 0;
};

NormalizedCorpus NormalizeCorpus(const Corpus& corpus,
                                 const NormalizationConfig& config);

// Negated tokens are written with a leading '!'.
std::string EncodeToken(const Token& token);
Token DecodeToken(std::string_view encoded);

void WriteSentences(const NormalizedCorpus& corpus, std::ostream& out);
void SaveSentences(const NormalizedCorpus& corpus,
                   const std::filesystem::path& path);
NormalizedCorpus ReadSentences(std::istream& in);
NormalizedCorpus LoadSentences(const std::filesystem::path& path);

}  // namespace labelforge
