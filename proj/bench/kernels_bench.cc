// Parallel kernels against their serial references on synthetic data.
//   ./kernels_bench --benchmark_filter=Matrix

#include <benchmark/benchmark.h>

#include <map>

#include "labelforge/kernels.h"
#include "labelforge/synthetic.h"

namespace lf = labelforge;
namespace kr = labelforge::kernels;

namespace {

const lf::Corpus& Reports(std::size_t variants) {
  static std::map<std::size_t, lf::Corpus> cache;
  auto it = cache.find(variants);
  if (it == cache.end()) {
    lf::SyntheticOptions options;
    options.variants_per_group = variants;
    it = cache.emplace(variants, lf::SyntheticReports(lf::GenerateSynthetic(options))).first;
  }
  return it->second;
}

std::vector<lf::NormalizedSentence> Sentences(std::size_t variants) {
  return lf::NormalizeCorpus(Reports(variants), lf::NormalizationConfig::Default()).sentences;
}

template <auto Kernel>
void BM_Normalize(benchmark::State& state) {
  const auto& corpus = Reports(static_cast<std::size_t>(state.range(0)));
  const auto config = lf::NormalizationConfig::Default();
  for (auto _ : state) {
    benchmark::DoNotOptimize(Kernel(corpus.sentences, config, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(corpus.sentences.size()));
}

template <auto Kernel>
void BM_ScorePairs(benchmark::State& state) {
  const auto sentences = Sentences(static_cast<std::size_t>(state.range(0)));
  std::vector<kr::TokenPair> pairs;
  for (std::size_t i = 0; i + 1 < sentences.size(); ++i) {
    for (std::size_t j = i + 1; j < sentences.size() && j < i + 8; ++j) {
      pairs.push_back({sentences[i].tokens, sentences[j].tokens});
    }
  }
  const auto params = lf::SimilarityParams::Defaults();
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(pairs, params));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pairs.size()));
}

template <auto Kernel>
void BM_Matrix(benchmark::State& state) {
  const auto sentences = Sentences(static_cast<std::size_t>(state.range(0)));
  const auto params = lf::SimilarityParams::Defaults();
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(sentences, params));
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(sentences.size() * sentences.size()));
}

template <auto Kernel>
void BM_ClusterSections(benchmark::State& state) {
  // Spread the corpus over six sections so there is something to share out.
  const auto sentences = Sentences(static_cast<std::size_t>(state.range(0)));
  std::vector<std::vector<lf::NormalizedSentence>> sections(6);
  for (std::size_t k = 0; k < sentences.size(); ++k) sections[k % 6].push_back(sentences[k]);
  const auto params = lf::SimilarityParams::Defaults();
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(sections, params));
}

}  // namespace

BENCHMARK(BM_Normalize<&kr::reference::NormalizeAll>)->Name("Normalize/reference")->Arg(50)->Arg(500);
BENCHMARK(BM_Normalize<&kr::parallel::NormalizeAll>)->Name("Normalize/parallel")->Arg(50)->Arg(500);
BENCHMARK(BM_ScorePairs<&kr::reference::ScorePairs>)->Name("ScorePairs/reference")->Arg(50)->Arg(500);
BENCHMARK(BM_ScorePairs<&kr::parallel::ScorePairs>)->Name("ScorePairs/parallel")->Arg(50)->Arg(500);
BENCHMARK(BM_Matrix<&kr::reference::SimilarityMatrix>)->Name("Matrix/reference")->Arg(10)->Arg(50);
BENCHMARK(BM_Matrix<&kr::parallel::SimilarityMatrix>)->Name("Matrix/parallel")->Arg(10)->Arg(50);
BENCHMARK(BM_ClusterSections<&kr::reference::ClusterSections>)->Name("ClusterSections/reference")->Arg(50)->Arg(500);
BENCHMARK(BM_ClusterSections<&kr::parallel::ClusterSections>)->Name("ClusterSections/parallel")->Arg(50)->Arg(500);

BENCHMARK_MAIN();
