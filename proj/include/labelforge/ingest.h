#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace labelforge {

// Headings of the report template, in template order. Anything else lands in
// kOther with its heading preserved.
enum class SectionId {
  kLungs,
  kHeartMediastinum,
  kBonesSoftTissue,
  kTubesLines,
  kTechnicalAssessment,
  kViewpoint,
  kOther,
};

class SectionKind {
 public:
  SectionKind() = default;
  explicit SectionKind(SectionId id);

  // Heading text is case-folded; spaces, hyphens and slashes become '_'.
  // Known template headings map to their enumerated kind.
  static SectionKind FromHeading(std::string_view heading);
  static SectionKind Other(std::string name);

  SectionId id() const { return id_; }
  bool is_other() const { return id_ == SectionId::kOther; }
  // Empty for enumerated kinds.
  const std::string& other_name() const { return other_name_; }

  // Canonical heading: the enumerated name, or the custom name for kOther.
  std::string Name() const;

  // Template order first, custom headings afterwards by name.
  auto operator<=>(const SectionKind&) const = default;
  bool operator==(const SectionKind&) const = default;

 private:
  SectionId id_ = SectionId::kLungs;
  std::string other_name_;
};

struct ReportDocument {
  std::string report_id;
  std::vector<std::string> image_ids;
  std::vector<std::pair<SectionKind, std::string>> sections;

  bool operator==(const ReportDocument&) const = default;
};

struct RawSentence {
  std::string text;
  std::string report_id;
  SectionKind section;
  std::size_t index_in_section = 0;

  bool operator==(const RawSentence&) const = default;
};

struct Corpus {
  std::vector<ReportDocument> documents;
  std::vector<RawSentence> sentences;

  const ReportDocument* FindDocument(std::string_view report_id) const;

  bool operator==(const Corpus&) const = default;
};

// Accepts {"report_id", "image_ids", "sections": {heading: text}} and the flat
// form where every key other than id/report_id/image_ids is a heading.
// Blank sections are dropped. Throws kMissingReportId, kEmptyDocument, or
// kMalformedRecord.
ReportDocument ParseReport(const nlohmann::ordered_json& record);

// Splits on '.', '!' or '?' followed by whitespace or end of text. A period
// between two digits never splits.
std::vector<std::string> SplitSentences(std::string_view section_text);

// Appends a document and its sentences; throws kDuplicateReportId.
void AddDocument(Corpus& corpus, ReportDocument document);

Corpus LoadCorpus(const std::filesystem::path& path);
Corpus ParseCorpus(std::istream& in);

// Snapshot: a "LFCORPUS\t1" header line followed by one canonical record per
// document. Reading a snapshot re-derives the sentence list.
void WriteCorpusSnapshot(const Corpus& corpus, std::ostream& out);
void SaveCorpusSnapshot(const Corpus& corpus,
                        const std::filesystem::path& path);
Corpus ReadCorpusSnapshot(std::istream& in);
Corpus LoadCorpusSnapshot(const std::filesystem::path& path);

nlohmann::ordered_json ReportToJson(const ReportDocument& document);

}  // namespace labelforge
