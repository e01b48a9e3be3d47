#include "labelforge/normalize.h"

#include <cctype>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "json.hpp"
#include "labelforge/error.h"
#include "labelforge/kernels.h"
#include "labelforge/text.h"
#include "labelforge/toml_lite.h"

namespace labelforge {
namespace {

constexpr std::string_view kSentencesMagic = "LFSENT\t1";

bool IsWordByte(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || u >= 0x80;
}

bool IsClauseBreak(char c) {
  switch (c) {
    case ',': case ';': case ':': case '.': case '!': case '?':
    case '(': case ')': case '[': case ']': case '{': case '}': case '-':
      return true;
    default:
      return false;
  }
}

std::vector<std::string> ReadWordList(const nlohmann::json& value,
                                      const char* key) {
  if (!value.is_array()) {
    throw Error(ErrorKind::kInvalidConfig, std::string(key) + " must be an array");
  }
  std::vector<std::string> out;
  for (const auto& v : value) {
    if (!v.is_string()) {
      throw Error(ErrorKind::kInvalidConfig,
                  std::string(key) + " entries must be strings");
    }
    out.push_back(AsciiLower(Trim(v.get<std::string>())));
  }
  return out;
}

}  // namespace

std::string NormalizedSentence::Key() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i].surface;
  }
  return out;
}

std::string NormalizedSentence::Surface() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    const bool run_start = t.negated && (i == 0 || !tokens[i - 1].negated);
    if (i) out += ' ';
    if (run_start) out += "no ";
    out += t.surface;
    if (t.negated && i + 1 < tokens.size() && !tokens[i + 1].negated) out += ',';
  }
  return out;
}

const std::vector<std::string>& DefaultStopwords() {
  // Keep in sync with data/stopwords.txt.
  static const std::vector<std::string> kWords = {
      "a",     "about", "above", "after", "again", "all",   "also",  "am",
      "an",    "and",   "any",   "are",   "as",    "at",    "be",    "been",
      "being", "by",    "can",   "could", "did",   "do",    "does",  "for",
      "from",  "had",   "has",   "have",  "here",  "in",    "into",  "is",
      "it",    "its",   "of",    "on",    "onto",  "or",    "seen",  "so",
      "such",  "than",  "that",  "the",   "then",  "there", "these", "this",
      "those", "to",    "was",   "were",  "which", "with",
  };
  return kWords;
}

NormalizationConfig NormalizationConfig::Default() {
  NormalizationConfig config;
  config.stopwords.insert(DefaultStopwords().begin(), DefaultStopwords().end());
  config.negation_triggers = {"no", "not", "without", "denies", "negative"};
  config.negation_scope_terminators = {"but", "however", "except"};
  return config;
}

NormalizationConfig NormalizationConfig::Bare() { return NormalizationConfig{}; }

void NormalizationConfig::Validate() const {
  for (const auto& [abbrev, expansion] : abbreviations) {
    if (expansion.empty()) {
      throw Error(ErrorKind::kInvalidConfig,
                  "abbreviation '" + abbrev + "' has an empty expansion");
    }
  }
  for (const auto& trigger : negation_triggers) {
    if (stopwords.count(trigger)) {
      throw Error(ErrorKind::kInvalidConfig,
                  "'" + trigger + "' is both a stopword and a negation trigger");
    }
  }
}

std::set<std::string> ParseStopwords(std::istream& in) {
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = Trim(view);
    if (!view.empty()) out.insert(AsciiLower(view));
  }
  return out;
}

std::set<std::string> LoadStopwordFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ParseStopwords(in);
}

std::map<std::string, std::vector<std::string>> ParseAbbreviations(
    std::istream& in) {
  std::map<std::string, std::vector<std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = Trim(line);
    if (view.empty() || view.front() == '#') continue;
    auto tab = view.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorKind::kInvalidConfig, "expected abbrev<TAB>expansion",
                  line_no);
    }
    std::string abbrev = AsciiLower(Trim(view.substr(0, tab)));
    std::vector<std::string> expansion;
    for (const auto& t : Tokenize(view.substr(tab + 1))) {
      expansion.push_back(t.surface);
    }
    if (abbrev.empty() || expansion.empty()) {
      throw Error(ErrorKind::kInvalidConfig, "empty abbreviation or expansion",
                  line_no);
    }
    out[abbrev] = std::move(expansion);
  }
  return out;
}

std::map<std::string, std::vector<std::string>> LoadAbbreviationFile(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ParseAbbreviations(in);
}

NormalizationConfig LoadNormalizationConfig(const std::filesystem::path& path) {
  const nlohmann::json doc = LoadTomlLite(path);
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path file(p);
    return file.is_absolute() ? file : base / file;
  };

  NormalizationConfig config = NormalizationConfig::Default();
  for (const auto& [key, value] : doc.items()) {
    if (key == "stopwords_file") {
      config.stopwords = LoadStopwordFile(resolve(value.get<std::string>()));
    } else if (key == "stopwords") {
      auto words = ReadWordList(value, "stopwords");
      config.stopwords = {words.begin(), words.end()};
    } else if (key == "abbreviations_file") {
      config.abbreviations =
          LoadAbbreviationFile(resolve(value.get<std::string>()));
    } else if (key == "negation_triggers") {
      auto words = ReadWordList(value, "negation_triggers");
      config.negation_triggers = {words.begin(), words.end()};
    } else if (key == "negation_terminators") {
      auto words = ReadWordList(value, "negation_terminators");
      config.negation_scope_terminators = {words.begin(), words.end()};
    } else if (key == "typo_folding") {
      if (!value.is_boolean()) {
        throw Error(ErrorKind::kInvalidConfig, "typo_folding must be a boolean");
      }
      config.typo_folding = value.get<bool>();
    } else if (key == "typo_min_vocab_freq") {
      if (!value.is_number_integer() || value.get<long long>() < 0) {
        throw Error(ErrorKind::kInvalidConfig,
                    "typo_min_vocab_freq must be a non-negative integer");
      }
      config.typo_min_vocab_freq = value.get<std::size_t>();
    } else {
      throw Error(ErrorKind::kInvalidConfig, "unknown key '" + key + "'");
    }
  }
  config.Validate();
  return config;
}

TokenizedText TokenizeWithBoundaries(std::string_view raw) {
  TokenizedText out;
  std::string current;
  bool pending_break = false;
  auto flush = [&] {
    if (current.empty()) return;
    out.tokens.push_back(Token{current, false});
    out.clause_start.push_back(pending_break);
    pending_break = false;
    current.clear();
  };
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (IsWordByte(c)) {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      continue;
    }
    const bool next_is_word = i + 1 < raw.size() && IsWordByte(raw[i + 1]);
    if (c == '-' && !current.empty() && next_is_word) {
      current += c;
      continue;
    }
    if (c == '.' && !current.empty() &&
        std::isdigit(static_cast<unsigned char>(current.back())) &&
        i + 1 < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i + 1]))) {
      current += c;
      continue;
    }
    flush();
    if (IsClauseBreak(c)) pending_break = true;
  }
  flush();
  return out;
}

TokenSeq Tokenize(std::string_view raw) {
  return TokenizeWithBoundaries(raw).tokens;
}

TokenizedText ExpandAbbreviations(const TokenizedText& text,
                                  const NormalizationConfig& config) {
  if (config.abbreviations.empty()) return text;
  TokenizedText out;
  for (std::size_t i = 0; i < text.tokens.size(); ++i) {
    const Token& token = text.tokens[i];
    auto it = config.abbreviations.find(token.surface);
    if (it == config.abbreviations.end()) {
      out.tokens.push_back(token);
      out.clause_start.push_back(text.clause_start[i]);
      continue;
    }
    bool first = true;
    for (const auto& word : it->second) {
      out.tokens.push_back(Token{word, token.negated});
      out.clause_start.push_back(first && text.clause_start[i]);
      first = false;
    }
  }
  return out;
}

TokenSeq ExpandAbbreviations(const TokenSeq& tokens,
                             const NormalizationConfig& config) {
  TokenizedText text{tokens, std::vector<bool>(tokens.size(), false)};
  return ExpandAbbreviations(text, config).tokens;
}

TokenSeq TagNegations(const TokenizedText& text,
                      const NormalizationConfig& config) {
  TokenSeq out;
  out.reserve(text.tokens.size());
  bool in_scope = false;
  for (std::size_t i = 0; i < text.tokens.size(); ++i) {
    const Token& token = text.tokens[i];
    if (text.clause_start[i]) in_scope = false;
    if (config.negation_triggers.count(token.surface)) {
      in_scope = true;
      continue;
    }
    if (config.negation_scope_terminators.count(token.surface)) {
      in_scope = false;
      out.push_back(Token{token.surface, false});
      continue;
    }
    out.push_back(Token{token.surface, token.negated || in_scope});
  }
  return out;
}

TokenSeq TagNegations(const TokenSeq& tokens, const NormalizationConfig& config) {
  TokenizedText text{tokens, std::vector<bool>(tokens.size(), false)};
  return TagNegations(text, config);
}

Vocabulary BuildVocabulary(const std::vector<RawSentence>& sentences,
                           const NormalizationConfig& config) {
  Vocabulary vocab;
  for (const auto& s : sentences) {
    for (const auto& t : ExpandAbbreviations(Tokenize(s.text), config)) {
      ++vocab[t.surface];
    }
  }
  return vocab;
}

TypoFolder::TypoFolder(const Vocabulary& vocabulary, std::size_t min_freq)
    : vocabulary_(&vocabulary), min_freq_(min_freq) {
  for (const auto& [word, freq] : vocabulary) {
    if (freq >= min_freq_) frequent_by_len_[word.size()].push_back(word);
  }
  for (const auto& [word, freq] : vocabulary) {
    if (freq < min_freq_) {
      std::string target = Lookup(word);
      if (target != word) folded_.emplace(word, std::move(target));
    }
  }
}

std::string TypoFolder::Lookup(const std::string& word) const {
  const std::string* match = nullptr;
  for (std::size_t len = word.size() ? word.size() - 1 : 0;
       len <= word.size() + 1; ++len) {
    auto bucket = frequent_by_len_.find(len);
    if (bucket == frequent_by_len_.end()) continue;
    for (const auto& candidate : bucket->second) {
      if (!WithinOneEdit(word, candidate)) continue;
      if (match != nullptr) return word;  // ambiguous
      match = &candidate;
    }
  }
  return match ? *match : word;
}

std::string TypoFolder::Fold(const std::string& word) const {
  auto it = vocabulary_->find(word);
  if (it != vocabulary_->end()) {
    if (it->second >= min_freq_) return word;
    auto folded = folded_.find(word);
    return folded == folded_.end() ? word : folded->second;
  }
  return Lookup(word);
}

TokenSeq NormalizeText(std::string_view text, const NormalizationConfig& config,
                       const TypoFolder* folder) {
  TokenizedText tokenized =
      ExpandAbbreviations(TokenizeWithBoundaries(text), config);
  TokenSeq tagged = TagNegations(tokenized, config);
  TokenSeq out;
  out.reserve(tagged.size());
  for (auto& token : tagged) {
    if (config.stopwords.count(token.surface)) continue;
    if (folder != nullptr) token.surface = folder->Fold(token.surface);
    out.push_back(std::move(token));
  }
  if (out.empty()) {
    throw Error(ErrorKind::kEmptySentenceAfterNormalization, std::string(text));
  }
  return out;
}

NormalizedSentence NormalizeSentence(const RawSentence& raw,
                                     const NormalizationConfig& config,
                                     const Vocabulary& vocabulary) {
  if (Trim(raw.text).empty()) {
    throw Error(ErrorKind::kEmptySentenceAfterNormalization, "blank sentence");
  }
  std::optional<TypoFolder> folder;
  if (config.typo_folding) folder.emplace(vocabulary, config.typo_min_vocab_freq);
  NormalizedSentence out;
  out.tokens = NormalizeText(raw.text, config, folder ? &*folder : nullptr);
  out.section = raw.section;
  out.sources.push_back(SourceRef{raw.report_id, raw.index_in_section, {}});
  out.frequency = 1;
  return out;
}

std::vector<NormalizedSentence> DedupCorpus(
    std::vector<NormalizedSentence> sentences) {
  std::vector<NormalizedSentence> out;
  std::map<std::pair<SectionKind, TokenSeq>, std::size_t> index;
  for (auto& s : sentences) {
    auto [it, inserted] = index.try_emplace({s.section, s.tokens}, out.size());
    if (inserted) {
      out.push_back(std::move(s));
      continue;
    }
    NormalizedSentence& target = out[it->second];
    target.frequency += s.frequency;
    for (auto& src : s.sources) target.sources.push_back(std::move(src));
  }
  return out;
}

NormalizedCorpus NormalizeCorpus(const Corpus& corpus,
                                 const NormalizationConfig& config) {
  config.Validate();
  Vocabulary vocab;
  std::optional<TypoFolder> folder;
  if (config.typo_folding) {
    vocab = BuildVocabulary(corpus.sentences, config);
    folder.emplace(vocab, config.typo_min_vocab_freq);
  }
  auto normalized = kernels::parallel::NormalizeAll(
      corpus.sentences, config, folder ? &*folder : nullptr);

  std::unordered_map<std::string_view, const ReportDocument*> docs;
  for (const auto& doc : corpus.documents) docs.emplace(doc.report_id, &doc);

  NormalizedCorpus out;
  out.raw_sentences = corpus.sentences.size();
  std::vector<NormalizedSentence> kept;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    if (!normalized[i]) {
      ++out.dropped_sentences;
      continue;
    }
    NormalizedSentence s;
    s.tokens = std::move(*normalized[i]);
    const RawSentence& raw = corpus.sentences[i];
    s.section = raw.section;
    SourceRef src{raw.report_id, raw.index_in_section, {}};
    if (auto it = docs.find(raw.report_id); it != docs.end()) {
      src.image_ids = it->second->image_ids;
    }
    s.sources.push_back(std::move(src));
    kept.push_back(std::move(s));
  }
  out.sentences = DedupCorpus(std::move(kept));
  return out;
}

std::string EncodeToken(const Token& token) {
  return token.negated ? "!" + token.surface : token.surface;
}

Token DecodeToken(std::string_view encoded) {
  if (!encoded.empty() && encoded.front() == '!') {
    return Token{std::string(encoded.substr(1)), true};
  }
  return Token{std::string(encoded), false};
}

namespace {

nlohmann::ordered_json SentenceToJson(const NormalizedSentence& s) {
  nlohmann::ordered_json tokens = nlohmann::ordered_json::array();
  for (const auto& t : s.tokens) tokens.push_back(EncodeToken(t));
  nlohmann::ordered_json sources = nlohmann::ordered_json::array();
  for (const auto& src : s.sources) {
    sources.push_back({{"report_id", src.report_id},
                       {"index", src.index_in_section},
                       {"image_ids", src.image_ids}});
  }
  nlohmann::ordered_json record;
  record["section"] = s.section.Name();
  record["tokens"] = std::move(tokens);
  record["frequency"] = s.frequency;
  record["sources"] = std::move(sources);
  return record;
}

}  // namespace

void WriteSentences(const NormalizedCorpus& corpus, std::ostream& out) {
  out << kSentencesMagic << '\n';
  nlohmann::ordered_json meta;
  meta["raw_sentences"] = corpus.raw_sentences;
  meta["dropped_sentences"] = corpus.dropped_sentences;
  out << meta.dump() << '\n';
  for (const auto& s : corpus.sentences) out << SentenceToJson(s).dump() << '\n';
}

void SaveSentences(const NormalizedCorpus& corpus,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  WriteSentences(corpus, out);
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

NormalizedCorpus ReadSentences(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSentencesMagic) {
    throw Error(ErrorKind::kMalformedRecord, "not a sentences file", 1);
  }
  NormalizedCorpus out;
  std::size_t line_no = 1;
  try {
    if (!std::getline(in, line)) {
      throw Error(ErrorKind::kMalformedRecord, "missing metadata line", 2);
    }
    ++line_no;
    auto meta = nlohmann::json::parse(line);
    out.raw_sentences = meta.at("raw_sentences").get<std::size_t>();
    out.dropped_sentences = meta.at("dropped_sentences").get<std::size_t>();
    while (std::getline(in, line)) {
      ++line_no;
      if (Trim(line).empty()) continue;
      auto record = nlohmann::json::parse(line);
      NormalizedSentence s;
      s.section = SectionKind::FromHeading(record.at("section").get<std::string>());
      for (const auto& t : record.at("tokens")) {
        s.tokens.push_back(DecodeToken(t.get<std::string>()));
      }
      s.frequency = record.at("frequency").get<std::size_t>();
      for (const auto& src : record.at("sources")) {
        s.sources.push_back(
            SourceRef{src.at("report_id").get<std::string>(),
                      src.at("index").get<std::size_t>(),
                      src.at("image_ids").get<std::vector<std::string>>()});
      }
      if (s.tokens.empty() || s.frequency != s.sources.size()) {
        throw Error(ErrorKind::kMalformedRecord,
                    "empty tokens or frequency/source mismatch", line_no);
      }
      out.sentences.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformedRecord, e.what(), line_no);
  }
  return out;
}

NormalizedCorpus LoadSentences(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ReadSentences(in);
}

}  // namespace labelforge
