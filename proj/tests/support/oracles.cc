#include "oracles.h"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace labelforge::testing {

double OracleRho(const Token& a, const Token& b, double tau) {
  if (a.negated != b.negated) return 0.0;
  std::size_t p = 0;
  while (p < a.surface.size() && p < b.surface.size() && a.surface[p] == b.surface[p]) {
    ++p;
  }
  const double longest =
      static_cast<double>(std::max(a.surface.size(), b.surface.size()));
  if (longest == 0.0) return 0.0;
  const double ratio = static_cast<double>(p) / longest;
  return ratio >= tau ? ratio : 0.0;
}

double OracleLcfCell(const TokenSeq& s, const TokenSeq& t, std::size_t i,
                     std::size_t j, double tau, double delta) {
  if (i == 0 || j == 0) return 0.0;
  const double rho = OracleRho(s[i - 1], t[j - 1], tau);
  const double diag = OracleLcfCell(s, t, i - 1, j - 1, tau, delta);
  const double up = OracleLcfCell(s, t, i - 1, j, tau, delta);
  const double left = OracleLcfCell(s, t, i, j - 1, tau, delta);
  if (diag + rho > up && diag + rho > left) return diag + rho;
  if (up + rho > left) return up - delta;
  return left - delta;
}

double OracleDice(const TokenSeq& s, const TokenSeq& t) {
  if (s.empty() && t.empty()) return 0.0;
  std::vector<Token> pool = t;
  std::size_t common = 0;
  for (const auto& w : s) {
    auto it = std::find(pool.begin(), pool.end(), w);
    if (it != pool.end()) {
      ++common;
      pool.erase(it);
    }
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(s.size() + t.size());
}

double OracleCombined(const TokenSeq& s, const TokenSeq& t, double tau, double delta) {
  auto ordered = [&](const TokenSeq& x, const TokenSeq& y) {
    if (x.empty()) return 0.0;
    const double c = OracleLcfCell(x, y, x.size(), y.size(), tau, delta);
    return std::max(0.0, c) / static_cast<double>(x.size());
  };
  return std::max({OracleDice(s, t), ordered(s, t), ordered(t, s)});
}

double OracleCombinedTabulated(const TokenSeq& s, const TokenSeq& t, double tau,
                               double delta) {
  auto ordered = [&](const TokenSeq& x, const TokenSeq& y) {
    if (x.empty()) return 0.0;
    std::vector<std::vector<double>> c(x.size() + 1, std::vector<double>(y.size() + 1, 0.0));
    for (std::size_t i = 1; i <= x.size(); ++i) {
      for (std::size_t j = 1; j <= y.size(); ++j) {
        const double rho = OracleRho(x[i - 1], y[j - 1], tau);
        const double diag = c[i - 1][j - 1] + rho;
        if (diag > c[i - 1][j] && diag > c[i][j - 1]) {
          c[i][j] = diag;
        } else if (c[i - 1][j] + rho > c[i][j - 1]) {
          c[i][j] = c[i - 1][j] - delta;
        } else {
          c[i][j] = c[i][j - 1] - delta;
        }
      }
    }
    return std::max(0.0, c[x.size()][y.size()]) / static_cast<double>(x.size());
  };
  return std::max({OracleDice(s, t), ordered(s, t), ordered(t, s)});
}

std::size_t Levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                          std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  return d[a.size()][b.size()];
}

double AdjustedRandIndex(const std::vector<std::size_t>& truth,
                         const std::vector<std::size_t>& predicted) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("labelings differ in length");
  }
  auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> rows, cols;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    joint[{truth[k], predicted[k]}] += 1;
    rows[truth[k]] += 1;
    cols[predicted[k]] += 1;
  }
  double index = 0, a = 0, b = 0;
  for (const auto& [key, n] : joint) index += pairs(n);
  for (const auto& [key, n] : rows) a += pairs(n);
  for (const auto& [key, n] : cols) b += pairs(n);
  const double expected = a * b / pairs(static_cast<double>(truth.size()));
  const double max_index = (a + b) / 2.0;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

const std::vector<std::string>& StemAlphabet() {
  static const std::vector<std::string> kStems = {
      "pleura", "pleural", "pleurae",  "effuse",  "effusion", "effusions",
      "left",   "leftward", "line",    "lines",   "opac",     "opacity",
  };
  return kStems;
}

TokenSeq RandomTokens(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len,
                      double negation_rate) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> stem(0, StemAlphabet().size() - 1);
  std::bernoulli_distribution neg(negation_rate);
  TokenSeq out(len(rng));
  for (auto& t : out) t = Token{StemAlphabet()[stem(rng)], neg(rng)};
  return out;
}

std::vector<NormalizedSentence> RandomSentences(std::mt19937_64& rng, std::size_t n,
                                                std::size_t sections) {
  const SectionId kinds[] = {SectionId::kLungs, SectionId::kHeartMediastinum,
                             SectionId::kTubesLines};
  std::uniform_int_distribution<std::size_t> section(0, std::min<std::size_t>(sections, 3) - 1);
  std::uniform_int_distribution<std::size_t> freq(1, 4);
  std::set<std::pair<std::size_t, TokenSeq>> seen;
  std::vector<NormalizedSentence> out;
  for (std::size_t k = 0; k < n; ++k) {
    NormalizedSentence s;
    const std::size_t sec = section(rng);
    s.section = SectionKind(kinds[sec]);
    s.tokens = RandomTokens(rng, 1, 6);
    if (!seen.insert({sec, s.tokens}).second) continue;
    s.frequency = freq(rng);
    for (std::size_t f = 0; f < s.frequency; ++f) {
      const std::string report = "r" + std::to_string(out.size()) + "_" + std::to_string(f);
      s.sources.push_back(SourceRef{report, 0, {report + ".png"}});
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t CompleteLinkageViolations(const std::vector<Cluster>& clusters,
                                      const SimilarityParams& params) {
  std::size_t violations = 0;
  for (const auto& c : clusters) {
    for (std::size_t i = 0; i < c.members.size(); ++i) {
      for (std::size_t j = i + 1; j < c.members.size(); ++j) {
        const double score = OracleCombinedTabulated(
            c.members[i].tokens, c.members[j].tokens, params.tau, params.delta);
        if (score < params.cluster_gamma) ++violations;
      }
    }
  }
  return violations;
}

TempDir::TempDir(const std::string& tag) {
  static int counter = 0;
  path_ = std::filesystem::temp_directory_path() /
          ("labelforge-" + tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace labelforge::testing
