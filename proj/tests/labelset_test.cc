#include <functional>
#include <sstream>

#include "doctest.h"
#include "labelforge/error.h"
#include "labelforge/labelset.h"
#include "support/oracles.h"

namespace lf = labelforge;

namespace {

// A cluster with one member sentence seen in `images` distinct reports, each
// carrying one image named "<prefix>-<k>.png".
lf::Cluster MakeCluster(const std::string& id, const std::string& word,
                        std::size_t images, const std::string& prefix,
                        lf::SectionId section = lf::SectionId::kLungs) {
  lf::NormalizedSentence s;
  s.tokens = {{word, false}};
  s.section = lf::SectionKind(section);
  s.frequency = images;
  for (std::size_t k = 0; k < images; ++k) {
    const std::string report = prefix + "-" + std::to_string(k);
    s.sources.push_back(lf::SourceRef{report, 0, {report + ".png"}});
  }
  lf::Cluster c;
  c.cluster_id = id;
  c.section = s.section;
  c.members = {s};
  c.representative = word;
  return c;
}

lf::ClusterSet ThreeClusters() {
  lf::ClusterSet set;
  set.clusters = {MakeCluster("lungs-0001", "effusion", 3, "a"),
                  MakeCluster("lungs-0002", "effusions", 2, "b"),
                  MakeCluster("tubes_lines-0001", "picc", 4, "a",
                              lf::SectionId::kTubesLines)};
  return set;
}

lf::MergeDecision Merge(const std::string& group, std::vector<std::string> members,
                        const std::string& label, std::int64_t ts) {
  lf::MergeDecision d;
  d.group_id = group;
  d.member_cluster_ids = std::move(members);
  d.label_text = label;
  d.author = "tester";
  d.timestamp_ms = ts;
  return d;
}

lf::MergeDecision Delete(const std::string& group, std::int64_t ts) {
  lf::MergeDecision d;
  d.kind = lf::DecisionKind::kDelete;
  d.group_id = group;
  d.timestamp_ms = ts;
  return d;
}

lf::ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const lf::Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return lf::ErrorKind::kIo;
}

}  // namespace

TEST_CASE("no decisions: every cluster is its own group") {
  const auto set = ThreeClusters();
  const auto groups = lf::ApplyMerges(set, {});
  REQUIRE(groups.size() == 3);
  CHECK(groups[0].group_id == "lungs-0001");
  CHECK(groups[0].label_text == "effusion");
  CHECK_FALSE(groups[0].from_decision);
  CHECK(groups[0].image_support == 3);
  CHECK(groups[2].report_support == 4);
}

TEST_CASE("merge, supersede and delete") {
  const auto set = ThreeClusters();
  lf::GroupState state(set);
  state.Apply(Merge("g0001", {"lungs-0002", "lungs-0001"}, "pleural effusion", 10));
  auto groups = state.Groups();
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].group_id == "g0001");
  CHECK(groups[0].cluster_ids == std::vector<std::string>{"lungs-0001", "lungs-0002"});
  CHECK(groups[0].image_support == 5);
  CHECK(groups[0].from_decision);
  CHECK_FALSE(groups[0].spans_sections);

  // A later merge takes a cluster away from the first group.
  state.Apply(Merge("g0002", {"lungs-0002", "tubes_lines-0001"}, "mixed", 20));
  groups = state.Groups();
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].cluster_ids == std::vector<std::string>{"lungs-0001"});
  CHECK(groups[1].group_id == "g0002");
  CHECK(groups[1].spans_sections);
  // Reports a-0..a-2 are shared between the lungs and tubes clusters.
  CHECK(groups[1].image_support == 6);

  // Redefining a group replaces its members.
  state.Apply(Merge("g0001", {"lungs-0001"}, "effusion (any)", 30));
  CHECK(state.Groups()[0].label_text == "effusion (any)");

  state.Apply(Delete("g0002", 40));
  groups = state.Groups();
  REQUIRE(groups.size() == 3);
  CHECK(groups[1].group_id == "lungs-0002");
  CHECK_FALSE(state.IsLive("g0002"));
}

TEST_CASE("a group emptied by later merges is retired") {
  const auto set = ThreeClusters();
  lf::GroupState state(set);
  state.Apply(Merge("g0001", {"lungs-0001"}, "x", 1));
  state.Apply(Merge("g0002", {"lungs-0001", "lungs-0002"}, "y", 2));
  CHECK_FALSE(state.IsLive("g0001"));
  CHECK(state.live_decisions() == 1);
}

TEST_CASE("decision errors leave the state unchanged") {
  const auto set = ThreeClusters();
  lf::GroupState state(set);
  state.Apply(Merge("g0001", {"lungs-0001"}, "effusion", 100));
  const auto before = state.Groups().size();

  CHECK(KindOf([&] { state.Apply(Merge("g0002", {"lungs-9999"}, "x", 200)); }) ==
        lf::ErrorKind::kUnknownClusterId);
  CHECK(KindOf([&] { state.Apply(Delete("g0042", 200)); }) ==
        lf::ErrorKind::kUnknownGroupId);
  CHECK(KindOf([&] { state.Apply(Merge("g0002", {}, "x", 200)); }) ==
        lf::ErrorKind::kInvalidDecision);
  CHECK(KindOf([&] { state.Apply(Merge("g0002", {"lungs-0002"}, "  ", 200)); }) ==
        lf::ErrorKind::kInvalidDecision);
  CHECK(KindOf([&] { state.Apply(Merge("lungs-0002", {"lungs-0002"}, "x", 200)); }) ==
        lf::ErrorKind::kInvalidDecision);
  CHECK(KindOf([&] { state.Apply(Merge("", {"lungs-0002"}, "x", 200)); }) ==
        lf::ErrorKind::kInvalidDecision);

  // Superseding needs a strictly later timestamp.
  CHECK(KindOf([&] { state.Apply(Merge("g0001", {"lungs-0002"}, "x", 100)); }) ==
        lf::ErrorKind::kConflictingDecision);
  CHECK(KindOf([&] { state.Apply(Merge("g0003", {"lungs-0001"}, "x", 50)); }) ==
        lf::ErrorKind::kConflictingDecision);
  CHECK(KindOf([&] { state.Apply(Delete("g0001", 99)); }) ==
        lf::ErrorKind::kConflictingDecision);

  CHECK(state.Groups().size() == before);
  CHECK(state.IsLive("g0001"));
  // Untouched clusters may be merged at any timestamp.
  state.Apply(Merge("g0002", {"lungs-0002"}, "x", 1));
  CHECK(state.IsLive("g0002"));
}

TEST_CASE("support filter boundary") {
  lf::ClusterSet set;
  set.clusters = {MakeCluster("lungs-0001", "a", 49, "p"),
                  MakeCluster("lungs-0002", "b", 50, "q"),
                  MakeCluster("lungs-0003", "c", 51, "r")};
  const auto filtered = lf::FilterMinSupport(lf::ApplyMerges(set, {}), 50);
  REQUIRE(filtered.labels.size() == 2);
  CHECK(filtered.labels[0].label_id == "L001");
  CHECK(filtered.labels[0].image_support == 50);
  CHECK(filtered.labels[1].label_id == "L002");
  CHECK(filtered.labels[1].image_support == 51);
  REQUIRE(filtered.dropped.size() == 1);
  CHECK(filtered.dropped[0].image_support == 49);

  CHECK(lf::FilterMinSupport(lf::ApplyMerges(set, {}), 0).labels.size() == 3);
}

TEST_CASE("support counts distinct images, not sentences") {
  lf::ClusterSet set;
  auto c = MakeCluster("lungs-0001", "a", 3, "p");
  // The same three reports again through a second member sentence.
  auto extra = c.members[0];
  extra.tokens = {{"aa", false}};
  c.members.push_back(extra);
  set.clusters = {c};
  const auto groups = lf::ApplyMerges(set, {});
  CHECK(groups[0].image_support == 3);
  CHECK(groups[0].report_support == 3);
}

TEST_CASE("singletons with enough support each become a column") {
  lf::ClusterSet set;
  for (int k = 0; k < 7; ++k) {
    set.clusters.push_back(MakeCluster("lungs-000" + std::to_string(k + 1),
                                       "w" + std::to_string(k), 5,
                                       "s" + std::to_string(k)));
  }
  const auto filtered = lf::FilterMinSupport(lf::ApplyMerges(set, {}), 5);
  CHECK(filtered.labels.size() == 7);
  const auto exported = lf::ExportLabelMatrix(set, filtered.labels);
  CHECK(exported.matrix.columns.size() == 7);
  CHECK(exported.matrix.rows.size() == 35);
  for (std::size_t sum : exported.matrix.ColumnSums()) CHECK(sum == 5);
}

TEST_CASE("matrix cells follow sources and unlabeled images are listed") {
  const auto set = ThreeClusters();
  const auto groups = lf::ApplyMerges(set, {Merge("g0001", {"lungs-0001", "lungs-0002"},
                                                  "effusion", 1)});
  const auto filtered = lf::FilterMinSupport(groups, 5);
  REQUIRE(filtered.labels.size() == 1);
  const auto exported =
      lf::ExportLabelMatrix(set, filtered.labels, {"extra.png", "a-0.png"});
  // a-0..a-3, b-0, b-1, extra
  CHECK(exported.matrix.rows.size() == 7);
  CHECK(exported.matrix.ColumnSums() == std::vector<std::size_t>{5});
  CHECK(exported.unlabeled_images == std::vector<std::string>{"a-3.png", "extra.png"});
}

TEST_CASE("export files") {
  const auto set = ThreeClusters();
  const auto groups = lf::ApplyMerges(set, {Merge("g0001", {"lungs-0001", "lungs-0002"},
                                                  "pleural, effusion", 1)});
  lf::testing::TempDir dir("export");
  const auto summary = lf::WriteLabelExport(dir.path(), set, groups, 4, true);
  CHECK(summary.labels == 2);
  CHECK(summary.groups == 2);
  CHECK(summary.images == 6);
  CHECK(lf::testing::ReadFile(dir / "labels.csv") ==
        "label_id,section,label_text,image_support\n"
        "L001,lungs,\"pleural, effusion\",5\n"
        "L002,tubes_lines,picc,4\n");
  const auto matrix = lf::testing::ReadFile(dir / "matrix.csv");
  CHECK(matrix.rfind("image_id,label_id,value\na-0.png,L001,1\na-0.png,L002,1\n", 0) == 0);
  CHECK(lf::testing::ReadFile(dir / "matrix_dense.csv")
            .rfind("image_id,L001,L002\na-0.png,1,1\n", 0) == 0);
  const auto audit = nlohmann::json::parse(lf::testing::ReadFile(dir / "audit.json"));
  CHECK(audit["labels"] == 2);
  CHECK(audit["dropped_groups"].empty());

  const auto strict = lf::WriteLabelExport(dir.path(), set, groups, 6);
  CHECK(strict.labels == 0);
  CHECK(strict.dropped.size() == 2);
  CHECK(strict.unlabeled_images.size() == 6);
}

TEST_CASE("decision log round trip and corruption") {
  const std::vector<lf::MergeDecision> decisions = {
      Merge("g0001", {"lungs-0001", "lungs-0002"}, "effusion", 5), Delete("g0001", 6)};
  std::string text;
  for (const auto& d : decisions) text += lf::DecisionToJson(d).dump() + "\n";

  std::istringstream in(text);
  const auto parsed = lf::ParseDecisionLog(in);
  CHECK_FALSE(parsed.corruption);
  CHECK(parsed.decisions == decisions);
  CHECK(parsed.valid_bytes == text.size());

  std::istringstream torn(text + "{\"op\":\"merge\",\"gro");
  const auto partial = lf::ParseDecisionLog(torn);
  REQUIRE(partial.corruption);
  CHECK(partial.decisions.size() == 2);
  CHECK(partial.valid_bytes == text.size());

  std::istringstream garbage(text + "not json\n" + text);
  const auto stopped = lf::ParseDecisionLog(garbage);
  REQUIRE(stopped.corruption);
  CHECK(stopped.decisions.size() == 2);

  lf::testing::TempDir dir("log");
  CHECK(lf::ReadDecisionLog(dir / "missing.jsonl").decisions.empty());
  lf::testing::WriteFile(dir / "bad.jsonl", text + "{\"op\":\"rename\",\"group_id\":\"g\","
                                                   "\"timestamp\":1}\n");
  try {
    lf::ReadDecisionLog(dir / "bad.jsonl");
    FAIL("expected CorruptLog");
  } catch (const lf::Error& e) {
    CHECK(e.kind() == lf::ErrorKind::kCorruptLog);
    CHECK(std::string(e.what()).find("offset " + std::to_string(text.size())) !=
          std::string::npos);
  }
}
