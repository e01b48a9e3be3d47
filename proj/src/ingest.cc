#include "labelforge/ingest.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "labelforge/error.h"
#include "labelforge/text.h"

namespace labelforge {
namespace {

constexpr std::array<std::pair<SectionId, std::string_view>, 6> kTemplate = {{
    {SectionId::kLungs, "lungs"},
    {SectionId::kHeartMediastinum, "heart_mediastinum"},
    {SectionId::kBonesSoftTissue, "bones_soft_tissue"},
    {SectionId::kTubesLines, "tubes_lines"},
    {SectionId::kTechnicalAssessment, "technical_assessment"},
    {SectionId::kViewpoint, "viewpoint"},
}};

constexpr std::string_view kSnapshotMagic = "LFCORPUS\t1";

std::string CanonicalHeading(std::string_view heading) {
  std::string out;
  bool pending_sep = false;
  for (char c : Trim(heading)) {
    if (c == ' ' || c == '-' || c == '/' || c == '_' || c == '\t') {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) out.push_back('_');
    pending_sep = false;
    out.push_back(static_cast<char>(
        std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool IsReservedKey(std::string_view key) {
  return key == "report_id" || key == "id" || key == "image_ids";
}

}  // namespace

SectionKind::SectionKind(SectionId id) : id_(id) {}

SectionKind SectionKind::FromHeading(std::string_view heading) {
  std::string canonical = CanonicalHeading(heading);
  for (const auto& [id, name] : kTemplate) {
    if (canonical == name) return SectionKind(id);
  }
  return Other(std::move(canonical));
}

SectionKind SectionKind::Other(std::string name) {
  if (name.empty()) {
    throw Error(ErrorKind::kMalformedRecord, "custom section needs a name");
  }
  SectionKind kind(SectionId::kOther);
  kind.other_name_ = std::move(name);
  return kind;
}

std::string SectionKind::Name() const {
  if (is_other()) return other_name_;
  return std::string(kTemplate[static_cast<std::size_t>(id_)].second);
}

const ReportDocument* Corpus::FindDocument(std::string_view report_id) const {
  for (const auto& doc : documents) {
    if (doc.report_id == report_id) return &doc;
  }
  return nullptr;
}

ReportDocument ParseReport(const nlohmann::ordered_json& record) {
  if (!record.is_object()) {
    throw Error(ErrorKind::kMalformedRecord, "record is not an object");
  }
  ReportDocument doc;
  const auto id_it = record.contains("report_id") ? record.find("report_id")
                                                  : record.find("id");
  if (id_it == record.end() || !id_it->is_string() ||
      Trim(id_it->get_ref<const std::string&>()).empty()) {
    throw Error(ErrorKind::kMissingReportId, "");
  }
  doc.report_id = std::string(Trim(id_it->get_ref<const std::string&>()));

  if (auto it = record.find("image_ids"); it != record.end()) {
    if (!it->is_array()) {
      throw Error(ErrorKind::kMalformedRecord, "image_ids must be an array");
    }
    for (const auto& image : *it) {
      if (!image.is_string()) {
        throw Error(ErrorKind::kMalformedRecord, "image id must be a string");
      }
      doc.image_ids.push_back(image.get<std::string>());
    }
  }

  std::vector<std::pair<std::string, const nlohmann::ordered_json*>> fields;
  if (auto it = record.find("sections"); it != record.end()) {
    if (!it->is_object()) {
      throw Error(ErrorKind::kMalformedRecord, "sections must be an object");
    }
    for (const auto& [key, value] : it->items()) fields.emplace_back(key, &value);
  } else {
    for (const auto& [key, value] : record.items()) {
      if (!IsReservedKey(key)) fields.emplace_back(key, &value);
    }
  }

  for (const auto& [heading, value] : fields) {
    if (!value->is_string()) {
      throw Error(ErrorKind::kMalformedRecord,
                  "section '" + heading + "' is not text");
    }
    const auto& text = value->get_ref<const std::string&>();
    if (Trim(text).empty()) continue;
    SectionKind kind = SectionKind::FromHeading(heading);
    for (const auto& existing : doc.sections) {
      if (existing.first == kind) {
        throw Error(ErrorKind::kMalformedRecord,
                    "duplicate section '" + kind.Name() + "'");
      }
    }
    doc.sections.emplace_back(std::move(kind), text);
  }
  if (doc.sections.empty()) {
    throw Error(ErrorKind::kEmptyDocument, doc.report_id);
  }
  // Stable: custom headings keep their input order among themselves.
  std::stable_sort(doc.sections.begin(), doc.sections.end(),
                   [](const auto& a, const auto& b) {
                     if (a.first.is_other() && b.first.is_other()) return false;
                     return a.first.id() < b.first.id();
                   });
  return doc;
}

std::vector<std::string> SplitSentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    std::string_view piece = Trim(text.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (c == '.' && i > 0 && i + 1 < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size() &&
           (text[j] == '.' || text[j] == '!' || text[j] == '?')) {
      ++j;
    }
    if (j == text.size() || std::isspace(static_cast<unsigned char>(text[j]))) {
      flush(j);
    }
    i = j - 1;
  }
  flush(text.size());
  return out;
}

void AddDocument(Corpus& corpus, ReportDocument document) {
  if (corpus.FindDocument(document.report_id) != nullptr) {
    throw Error(ErrorKind::kDuplicateReportId, document.report_id);
  }
  for (const auto& [kind, text] : document.sections) {
    std::size_t index = 0;
    for (auto& sentence : SplitSentences(text)) {
      corpus.sentences.push_back(
          RawSentence{std::move(sentence), document.report_id, kind, index++});
    }
  }
  corpus.documents.push_back(std::move(document));
}

Corpus ParseCorpus(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    nlohmann::ordered_json record;
    try {
      record = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::kMalformedRecord, e.what(), line_no);
    }
    ReportDocument doc;
    try {
      doc = ParseReport(record);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kMalformedRecord) {
        throw Error(ErrorKind::kMalformedRecord, e.detail(), line_no);
      }
      throw;
    }
    if (!seen.insert(doc.report_id).second) {
      throw Error(ErrorKind::kDuplicateReportId, doc.report_id, line_no);
    }
    AddDocument(corpus, std::move(doc));
  }
  return corpus;
}

Corpus LoadCorpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ParseCorpus(in);
}

nlohmann::ordered_json ReportToJson(const ReportDocument& document) {
  nlohmann::ordered_json sections = nlohmann::ordered_json::object();
  for (const auto& [kind, text] : document.sections) sections[kind.Name()] = text;
  nlohmann::ordered_json record;
  record["report_id"] = document.report_id;
  record["image_ids"] = document.image_ids;
  record["sections"] = std::move(sections);
  return record;
}

void WriteCorpusSnapshot(const Corpus& corpus, std::ostream& out) {
  out << kSnapshotMagic << '\n';
  for (const auto& doc : corpus.documents) out << ReportToJson(doc).dump() << '\n';
}

void SaveCorpusSnapshot(const Corpus& corpus,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  WriteCorpusSnapshot(corpus, out);
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

Corpus ReadCorpusSnapshot(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header != kSnapshotMagic) {
    throw Error(ErrorKind::kMalformedRecord, "not a corpus snapshot", 1);
  }
  std::stringstream rest;
  rest << in.rdbuf();
  try {
    return ParseCorpus(rest);
  } catch (const Error& e) {
    // Report line numbers relative to the whole file.
    if (e.line() == 0) throw;
    throw Error(e.kind(), e.detail(), e.line() + 1);
  }
}

Corpus LoadCorpusSnapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return ReadCorpusSnapshot(in);
}

}  // namespace labelforge
