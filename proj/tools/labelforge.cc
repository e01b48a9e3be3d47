// labelforge command-line driver.

#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "labelforge/clustering.h"
#include "labelforge/error.h"
#include "labelforge/ingest.h"
#include "labelforge/labelset.h"
#include "labelforge/normalize.h"
#include "labelforge/pipeline.h"
#include "labelforge/service.h"
#include "labelforge/similarity.h"
#include "labelforge/synthetic.h"
#include "labelforge/text.h"
#include "labelforge/tuning.h"
#include "spdlog/sinks/stdout_color_sinks.h"
#include "spdlog/spdlog.h"

namespace fs = std::filesystem;
using namespace labelforge;

namespace {

void SetUpLogging() {
  auto logger = spdlog::stderr_color_mt("labelforge");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("LABELFORGE_LOG_LEVEL")) {
    const std::string level = env;
    if (level == "error" || level == "warn" || level == "info" || level == "debug") {
      spdlog::set_level(spdlog::level::from_str(level));
    } else {
      spdlog::warn("ignoring LABELFORGE_LOG_LEVEL={}", level);
    }
  }
}

void WriteJsonFile(const fs::path& path, const nlohmann::ordered_json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

// Accepts a corpus snapshot or the raw JSONL form.
Corpus LoadAnyCorpus(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  in.close();
  if (first.rfind("LFCORPUS\t", 0) == 0) return LoadCorpusSnapshot(path);
  return LoadCorpus(path);
}

NormalizationConfig LoadNormalization(const std::string& path) {
  return path.empty() ? NormalizationConfig::Default() : LoadNormalizationConfig(path);
}

std::string Fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

void DumpTable(const char* title, const AlignmentTable& table) {
  std::cout << "# " << title << '\n';
  for (std::size_t i = 0; i < table.rows; ++i) {
    for (std::size_t j = 0; j < table.cols; ++j) {
      if (j) std::cout << '\t';
      std::cout << Fixed4(table.at(i, j));
    }
    std::cout << '\n';
  }
}

std::pair<std::string, int> ParseBind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorKind::kBindError, "expected host:port, got '" + bind + "'");
  }
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::kBindError, "bad port in '" + bind + "'");
  }
  if (port < 0 || port > 65535) throw Error(ErrorKind::kBindError, "port out of range");
  return {bind.substr(0, colon), port};
}

struct ParamFlags {
  double tau = SimilarityParams::Defaults().tau;
  double delta = SimilarityParams::Defaults().delta;
  double gamma = SimilarityParams::Defaults().gamma;
  std::optional<double> cluster_gamma;

  void Add(CLI::App* cmd, bool with_cluster_gamma) {
    cmd->add_option("--tau", tau, "minimum prefix ratio for a partial word match")
        ->capture_default_str();
    cmd->add_option("--delta", delta, "gap penalty")->capture_default_str();
    cmd->add_option("--gamma", gamma, "sentence match threshold")->capture_default_str();
    if (with_cluster_gamma) {
      cmd->add_option("--cluster-gamma", cluster_gamma,
                      "clustering threshold (defaults to --gamma)");
    }
  }

  SimilarityParams Get() const {
    SimilarityParams p = SimilarityParams::With(tau, delta, gamma);
    if (cluster_gamma) p.cluster_gamma = *cluster_gamma;
    p.Validate();
    return p;
  }
};

sigset_t StopSignals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  return set;
}

int Serve(const ServiceOptions& options, const std::string& bind) {
  const auto [host, port] = ParseBind(bind);
  // Block the stop signals before any thread starts; one waiter handles them.
  sigset_t signals = StopSignals();
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ReviewSession session(options);
  spdlog::info("replayed {} decisions over {} clusters", session.state_version(),
               session.clusters().clusters.size());
  CurationServer server(session);
  const int bound = server.Bind(host, port);

  std::thread waiter([&server, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {}, stopping", sig);
    server.Stop();
  });
  std::cout << "listening on " << host << ":" << bound << std::endl;
  server.Run();
  // Run() can also return on its own; wake the waiter so it can be joined.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  SetUpLogging();
  CLI::App app{"labelforge: curate a label vocabulary from templated reports"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "labelforge 0.1.0");

  // ingest
  std::string ingest_input, ingest_out;
  auto* ingest = app.add_subcommand("ingest", "parse a JSONL report corpus into a snapshot");
  ingest->add_option("--input", ingest_input, "reports.jsonl")->required();
  ingest->add_option("--out", ingest_out, "corpus snapshot")->required();

  // normalize
  std::string norm_corpus, norm_config, norm_out;
  auto* normalize = app.add_subcommand("normalize", "normalize and deduplicate sentences");
  normalize->add_option("--corpus", norm_corpus, "corpus snapshot or reports.jsonl")
      ->required();
  normalize->add_option("--config", norm_config, "normalization TOML");
  normalize->add_option("--out", norm_out, "sentence file")->required();

  // sim
  std::string sim_a, sim_b, sim_config;
  bool sim_dump = false;
  ParamFlags sim_params;
  auto* sim = app.add_subcommand("sim", "score two sentences");
  sim->add_option("--a", sim_a)->required();
  sim->add_option("--b", sim_b)->required();
  sim->add_option("--config", sim_config, "normalization TOML");
  sim->add_flag("--dump-table", sim_dump, "print the alignment tables");
  sim_params.Add(sim, false);

  // cluster
  std::string cluster_in, cluster_out;
  ParamFlags cluster_params;
  auto* cluster = app.add_subcommand("cluster", "greedy complete-linkage clustering");
  cluster->add_option("--sentences", cluster_in)->required();
  cluster->add_option("--out", cluster_out)->required();
  cluster_params.Add(cluster, true);

  // tune
  std::string tune_pairs, tune_config, tune_out;
  std::string tau_grid = "0.6,0.75,0.9", delta_grid = "0.05,0.1,0.2",
              gamma_grid = "0.5..0.95:0.05";
  double min_precision = 0.0, min_recall = 0.0;
  auto* tune = app.add_subcommand("tune", "sweep thresholds over labeled pairs");
  tune->add_option("--pairs", tune_pairs, "pairs.jsonl")->required();
  tune->add_option("--config", tune_config, "normalization TOML");
  tune->add_option("--tau-grid", tau_grid)->capture_default_str();
  tune->add_option("--delta-grid", delta_grid)->capture_default_str();
  tune->add_option("--gamma-grid", gamma_grid)->capture_default_str();
  tune->add_option("--min-precision", min_precision)->capture_default_str();
  tune->add_option("--min-recall", min_recall)->capture_default_str();
  tune->add_option("--out", tune_out, "sweep.json")->required();

  // export
  std::string export_clusters, export_decisions, export_out = "out", export_corpus;
  std::size_t export_min_support = 50;
  bool export_dense = false;
  auto* exp = app.add_subcommand("export", "apply decisions and write label artifacts");
  exp->add_option("--clusters", export_clusters)->required();
  exp->add_option("--decisions", export_decisions, "decision log (optional)");
  exp->add_option("--min-support", export_min_support)->capture_default_str();
  exp->add_option("--out-dir", export_out)->capture_default_str();
  exp->add_option("--corpus", export_corpus, "corpus whose images form the matrix rows");
  exp->add_flag("--dense", export_dense, "also write matrix_dense.csv");

  // run
  std::string run_config;
  auto* run = app.add_subcommand("run", "run the whole pipeline from a config file");
  run->add_option("--config", run_config, "pipeline.toml")->required();

  // serve
  ServiceOptions serve_options;
  std::string serve_bind = "127.0.0.1:8080", serve_ui;
  auto* serve = app.add_subcommand("serve", "HTTP review service");
  serve->add_option("--clusters", serve_options.clusters_path)->required();
  serve->add_option("--decisions", serve_options.decisions_path)->required();
  serve->add_option("--bind", serve_bind)->capture_default_str();
  serve->add_option("--export-dir", serve_options.export_dir)->capture_default_str();
  serve->add_option("--min-support", serve_options.default_min_support)
      ->capture_default_str();
  serve->add_option("--ui-dir", serve_ui, "static files served at /");
  serve->add_option("--author", serve_options.author)->capture_default_str();

  // synth
  SyntheticOptions synth_options;
  std::string synth_out;
  std::size_t synth_pairs = 200;
  std::uint64_t synth_pair_seed = 2;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with ground truth");
  synth->add_option("--out-dir", synth_out)->required();
  synth->add_option("--groups", synth_options.groups)->capture_default_str();
  synth->add_option("--variants", synth_options.variants_per_group)->capture_default_str();
  synth->add_option("--seed", synth_options.seed)->capture_default_str();
  synth->add_option("--pairs", synth_pairs)->capture_default_str();
  synth->add_option("--pair-seed", synth_pair_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const Corpus corpus = LoadCorpus(ingest_input);
      SaveCorpusSnapshot(corpus, ingest_out);
      std::cout << "documents\t" << corpus.documents.size() << "\nsentences\t"
                << corpus.sentences.size() << '\n';
    } else if (*normalize) {
      const Corpus corpus = LoadAnyCorpus(norm_corpus);
      const NormalizedCorpus out = NormalizeCorpus(corpus, LoadNormalization(norm_config));
      SaveSentences(out, norm_out);
      std::cout << "raw_sentences\t" << out.raw_sentences << "\ndropped_sentences\t"
                << out.dropped_sentences << "\nunique_sentences\t"
                << out.sentences.size() << '\n';
    } else if (*sim) {
      const NormalizationConfig config = LoadNormalization(sim_config);
      const SimilarityParams params = sim_params.Get();
      const TokenSeq a = NormalizeText(sim_a, config);
      const TokenSeq b = NormalizeText(sim_b, config);
      AlignmentTable ab, ba;
      const AlignmentResult r_ab = LcfAlign(a, b, params, &ab);
      const AlignmentResult r_ba = LcfAlign(b, a, params, &ba);
      const SimilarityScore score = Similarity(a, b, params);
      auto render = [](const TokenSeq& seq) {
        std::vector<std::string> words;
        for (const auto& t : seq) words.push_back(EncodeToken(t));
        return labelforge::Join(words, " ");
      };
      std::cout << "a\t" << render(a) << "\nb\t" << render(b) << '\n'
                << "unordered\t" << Fixed4(score.unordered) << '\n'
                << "ordered_ab\t" << Fixed4(r_ab.ordered_sim) << '\n'
                << "ordered_ba\t" << Fixed4(r_ba.ordered_sim) << '\n'
                << "ordered\t" << Fixed4(score.ordered) << '\n'
                << "combined\t" << Fixed4(score.combined) << '\n'
                << "match\t" << (score.combined >= params.gamma ? "yes" : "no") << '\n';
      if (sim_dump) {
        DumpTable("C(a,b)", ab);
        DumpTable("C(b,a)", ba);
      }
    } else if (*cluster) {
      const SimilarityParams params = cluster_params.Get();
      const NormalizedCorpus sentences = LoadSentences(cluster_in);
      ClusterSet set = ClusterCorpus(sentences.sentences, params);
      SaveClusters(set, cluster_out);
      std::cout << "unique_sentences\t" << set.counts.unique_sentences << "\nclusters\t"
                << set.clusters.size() << '\n';
    } else if (*tune) {
      const LoadedPairs loaded =
          LoadLabeledPairs(tune_pairs, LoadNormalization(tune_config));
      if (loaded.rejected_identical > 0) {
        spdlog::warn("skipped {} pairs that normalize to identical tokens",
                     loaded.rejected_identical);
      }
      const SweepResult sweep = Sweep(loaded.pairs, ParseGrid(tau_grid),
                                      ParseGrid(delta_grid), ParseGrid(gamma_grid));
      nlohmann::ordered_json doc = SweepToJson(sweep);
      doc["pairs"] = loaded.pairs.size();
      doc["rejected_identical"] = loaded.rejected_identical;
      doc["min_precision"] = min_precision;
      doc["min_recall"] = min_recall;
      std::optional<OperatingPoint> chosen;
      try {
        chosen = SelectOperatingPoint(sweep, min_precision, min_recall);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNoFeasiblePoint) throw;
        doc["selected"] = nullptr;
        WriteJsonFile(tune_out, doc);
        throw;
      }
      doc["selected"] = OperatingPointToJson(*chosen);
      WriteJsonFile(tune_out, doc);
      const auto& p = chosen->params;
      std::cout << "tau\t" << p.tau << "\ndelta\t" << p.delta << "\ngamma\t" << p.gamma
                << "\nprecision\t" << Fixed4(chosen->precision) << "\nrecall\t"
                << Fixed4(chosen->recall) << "\nf1\t" << Fixed4(chosen->f1) << '\n';
    } else if (*exp) {
      const ClusterSet clusters = LoadClusters(export_clusters);
      std::vector<MergeDecision> decisions;
      if (!export_decisions.empty()) decisions = ReadDecisionLog(export_decisions).decisions;
      const auto groups = ApplyMerges(clusters, decisions);
      std::vector<std::string> universe;
      if (!export_corpus.empty()) {
        for (const auto& doc : LoadAnyCorpus(export_corpus).documents) {
          universe.insert(universe.end(), doc.image_ids.begin(), doc.image_ids.end());
        }
      }
      const ExportSummary summary = WriteLabelExport(
          export_out, clusters, groups, export_min_support, export_dense, universe);
      std::cout << ExportSummaryToJson(summary).dump(2) << '\n';
    } else if (*run) {
      const PipelineReport report = RunPipeline(LoadPipelineConfig(run_config));
      std::cout << PipelineReportToJson(report).dump(2) << '\n';
    } else if (*serve) {
      if (!serve_ui.empty()) serve_options.ui_dir = fs::path(serve_ui);
      return Serve(serve_options, serve_bind);
    } else if (*synth) {
      const SyntheticCorpus corpus = GenerateSynthetic(synth_options);
      const auto pairs = GenerateSyntheticPairs(synth_options, synth_pairs,
                                                synth_pair_seed,
                                                NormalizationConfig::Default());
      fs::create_directories(synth_out);
      const Corpus reports = SyntheticReports(corpus);
      std::ofstream rep(fs::path(synth_out) / "reports.jsonl", std::ios::binary);
      for (const auto& doc : reports.documents) rep << ReportToJson(doc).dump() << '\n';
      std::ofstream pj(fs::path(synth_out) / "pairs.jsonl", std::ios::binary);
      for (const auto& p : pairs) pj << SyntheticPairToJson(p).dump() << '\n';
      std::ofstream truth(fs::path(synth_out) / "truth.jsonl", std::ios::binary);
      for (std::size_t i = 0; i < corpus.variants.size(); ++i) {
        nlohmann::ordered_json t;
        t["report_id"] = reports.documents[i].report_id;
        t["group"] = corpus.variants[i].group;
        truth << t.dump() << '\n';
      }
      if (!rep || !pj || !truth) throw Error(ErrorKind::kIo, "cannot write " + synth_out);
      std::cout << "reports\t" << reports.documents.size() << "\npairs\t" << pairs.size()
                << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
