#include "labelforge/synthetic.h"

#include <algorithm>
#include <cstdio>
#include <random>

#include "labelforge/error.h"
#include "labelforge/text.h"

namespace labelforge {
namespace {

// Heads have pairwise distinct three-letter prefixes.
const std::vector<std::string>& HeadWords() {
  static const std::vector<std::string> kHeads = {
      "effusion",     "pneumothorax", "cardiomegaly", "atelectasis",
      "consolidation", "fracture",    "granuloma",    "hyperinflation",
      "infiltrate",   "kyphosis",     "lymphadenopathy", "nodule",
      "opacity",      "sternotomy",   "tracheostomy", "vascular",
      "emphysema",    "bronchiectasis", "mediastinum", "pacemaker",
  };
  return kHeads;
}

const std::vector<std::string>& ModifierWords() {
  static const std::vector<std::string> kModifiers = {
      "bilateral", "basilar",    "moderate",   "minimal",    "apical",
      "retrocardiac", "diffuse", "patchy",     "interstitial", "superior",
      "inferior",  "posterior",  "anterior",   "subsegmental", "chronic",
      "stable",    "unchanged",  "increased",  "decreased",  "persistent",
      "residual",  "extensive",  "calcified",  "healed",     "displaced",
      "enlarged",  "elevated",   "prominent",  "streaky",    "linear",
      "rounded",   "central",    "peripheral", "segmental",  "lobular",
      "hemithorax", "diaphragm", "costophrenic", "junction", "overlying",
  };
  return kModifiers;
}

const std::vector<std::string>& Suffixes() {
  static const std::vector<std::string> kSuffixes = {"s", "ed", "al", "ly"};
  return kSuffixes;
}

const std::vector<std::string>& FillerWords() {
  static const std::vector<std::string> kFillers = {"the", "is", "of", "with",
                                                    "there", "seen", "a"};
  return kFillers;
}

class Generator {
 public:
  Generator(const SyntheticOptions& options, std::uint64_t seed)
      : options_(options), rng_(seed) {}

  std::vector<std::vector<std::string>> Bases() {
    std::vector<std::vector<std::string>> bases;
    const auto& modifiers = ModifierWords();
    for (std::size_t g = 0; g < options_.groups; ++g) {
      std::vector<std::string> words{HeadWords()[g]};
      std::vector<std::size_t> pick(modifiers.size());
      for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
      std::shuffle(pick.begin(), pick.end(), rng_);
      for (std::size_t i = 0; i < options_.modifiers_per_group; ++i) {
        words.push_back(modifiers[pick[i]]);
      }
      bases.push_back(std::move(words));
    }
    return bases;
  }

  std::string Variant(const std::vector<std::string>& base) {
    std::vector<std::string> words;
    for (std::size_t i = 0; i < base.size(); ++i) {
      if (i > 0 && Chance(options_.dropout_rate)) continue;
      std::string w = base[i];
      if (Chance(options_.suffix_rate)) w += Pick(Suffixes());
      words.push_back(std::move(w));
    }
    if (Chance(options_.stopword_rate)) {
      std::uniform_int_distribution<std::size_t> at(1, words.size());
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(at(rng_)),
                   Pick(FillerWords()));
    }
    std::string text = Join(words, " ");
    text[0] = static_cast<char>(text[0] - 'a' + 'A');
    return text + ".";
  }

  bool Chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  std::size_t Below(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

 private:
  const std::string& Pick(const std::vector<std::string>& v) { return v[Below(v.size())]; }

  const SyntheticOptions& options_;
  std::mt19937_64 rng_;
};

}  // namespace

void SyntheticOptions::Validate() const {
  auto rate = [](double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw Error(ErrorKind::kInvalidParams, std::string(name) + " must lie in [0, 1]");
    }
  };
  rate(suffix_rate, "suffix_rate");
  rate(stopword_rate, "stopword_rate");
  rate(dropout_rate, "dropout_rate");
  if (groups == 0 || groups > HeadWords().size()) {
    throw Error(ErrorKind::kInvalidParams,
                "groups must be between 1 and " + std::to_string(HeadWords().size()));
  }
  if (variants_per_group == 0) {
    throw Error(ErrorKind::kInvalidParams, "variants_per_group must be positive");
  }
  if (modifiers_per_group > ModifierWords().size()) {
    throw Error(ErrorKind::kInvalidParams, "too many modifiers per group");
  }
}

SyntheticCorpus GenerateSynthetic(const SyntheticOptions& options) {
  options.Validate();
  Generator gen(options, options.seed);
  SyntheticCorpus out;
  const auto bases = gen.Bases();
  for (std::size_t g = 0; g < bases.size(); ++g) {
    out.group_bases.push_back(Join(bases[g], " "));
    for (std::size_t v = 0; v < options.variants_per_group; ++v) {
      out.variants.push_back(SyntheticVariant{gen.Variant(bases[g]), g});
    }
  }
  return out;
}

std::vector<SyntheticPair> GenerateSyntheticPairs(const SyntheticOptions& options,
                                                  std::size_t count,
                                                  std::uint64_t seed,
                                                  const NormalizationConfig& config) {
  options.Validate();
  if (options.groups < 2 && count > 1) {
    throw Error(ErrorKind::kInvalidParams, "cross-group pairs need two groups");
  }
  // Same bases as GenerateSynthetic with options.seed; perturbations use `seed`.
  const auto bases = Generator(options, options.seed).Bases();
  Generator gen(options, seed);
  std::vector<SyntheticPair> pairs;
  std::size_t attempts = 0;
  while (pairs.size() < count) {
    if (++attempts > 1000 * (count + 1)) {
      throw Error(ErrorKind::kInvalidParams,
                  "cannot draw distinct pairs; perturbation rates too low");
    }
    const bool same = pairs.size() % 2 == 0;
    const std::size_t ga = gen.Below(bases.size());
    std::size_t gb = ga;
    if (!same) {
      gb = gen.Below(bases.size() - 1);
      if (gb >= ga) ++gb;
    }
    SyntheticPair p{gen.Variant(bases[ga]), gen.Variant(bases[gb]), same};
    if (NormalizeText(p.a, config) == NormalizeText(p.b, config)) continue;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<LabeledPair> NormalizePairs(const std::vector<SyntheticPair>& pairs,
                                        const NormalizationConfig& config) {
  std::vector<LabeledPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(LabeledPair{NormalizeText(p.a, config), NormalizeText(p.b, config),
                              p.same_meaning});
  }
  return out;
}

Corpus SyntheticReports(const SyntheticCorpus& corpus) {
  Corpus out;
  for (std::size_t i = 0; i < corpus.variants.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%05zu", i + 1);
    ReportDocument doc;
    doc.report_id = id;
    doc.image_ids = {std::string(id) + ".png"};
    doc.sections = {{SectionKind(SectionId::kLungs), corpus.variants[i].text}};
    AddDocument(out, std::move(doc));
  }
  return out;
}

nlohmann::ordered_json SyntheticPairToJson(const SyntheticPair& pair) {
  nlohmann::ordered_json j;
  j["a"] = pair.a;
  j["b"] = pair.b;
  j["same_meaning"] = pair.same_meaning;
  return j;
}

}  // namespace labelforge
