#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "godspell/corpus.hpp"
#include "godspell/error.hpp"
#include "godspell/rng.hpp"
#include "godspell/stats.hpp"

// LDA over fixed-size novel segments: vocabulary building, authorless
// downsampling, collapsed Gibbs sampling with Dirichlet hyperparameter
// optimization, and novel-level topic prominence.
namespace godspell::topics {

using WordId = std::uint32_t;
using Document = std::vector<WordId>;

class TopicError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Vocabulary

struct Vocabulary {
  std::vector<std::string> words;        // id -> word, sorted lexicographically
  std::vector<std::size_t> frequency;    // id -> corpus count before downsampling
  std::unordered_map<std::string, WordId> ids;
  std::size_t min_count = 0;

  std::size_t size() const { return words.size(); }
  bool contains(std::string_view w) const { return ids.contains(std::string(w)); }
};

struct EncodedCorpus {
  Vocabulary vocab;
  std::vector<Document> docs;
  std::vector<std::size_t> doc_novel;    // doc -> index into novel_ids
  std::vector<std::string> novel_ids;    // in first-seen order
  std::vector<std::size_t> doc_segment;  // doc -> segment index within its novel
};

// Lower-cases ASCII letters and strips punctuation (ASCII and common UTF-8
// quotes/dashes/ellipsis) from both ends. May return an empty string.
std::string normalize_token(std::string_view raw);

using StopwordSet = std::unordered_set<std::string>;

// One word per line, UTF-8; blank lines and '#' comments skipped; lower-cased.
StopwordSet read_stopwords(const std::filesystem::path& path);

// Throws TopicError if nothing survives filtering.
EncodedCorpus build_vocabulary(std::span<const corpus::Segment> segments, const StopwordSet& stopwords,
                               std::size_t min_count = 5);

// ---------------------------------------------------------------------------
// Authorless downsampling

// min(1, corpus_probability / novel_probability).
double retention_probability(double corpus_probability, double novel_probability);

// Keeps each token of word w in novel b with retention_probability(P(w), P(w|b)).
// Tokens are only removed; order is preserved.
std::vector<Document> authorless_downsample(std::span<const Document> docs, std::span<const std::size_t> doc_novel,
                                            std::size_t vocab_size, std::uint64_t seed);

std::size_t token_count(std::span<const Document> docs);

// ---------------------------------------------------------------------------
// Collapsed Gibbs sampling

struct TopicState {
  std::size_t num_topics = 0;
  std::size_t vocab_size = 0;
  std::vector<double> alpha;  // asymmetric document-topic prior
  double beta = 0.01;         // symmetric topic-word prior
  std::uint64_t rng_seed = 0;

  std::vector<std::vector<std::uint32_t>> z;  // per document, per token
  std::vector<std::int64_t> doc_topic;        // D x K
  std::vector<std::int64_t> topic_word;       // K x V
  std::vector<std::int64_t> topic_total;      // K

  std::size_t num_docs() const { return z.size(); }
  std::int64_t& n_dk(std::size_t d, std::size_t k) { return doc_topic[d * num_topics + k]; }
  std::int64_t n_dk(std::size_t d, std::size_t k) const { return doc_topic[d * num_topics + k]; }
  std::int64_t& n_kw(std::size_t k, std::size_t w) { return topic_word[k * vocab_size + w]; }
  std::int64_t n_kw(std::size_t k, std::size_t w) const { return topic_word[k * vocab_size + w]; }
  double alpha_sum() const;
};

// Random initial assignments and matching counts.
TopicState initialize_state(std::span<const Document> docs, std::size_t vocab_size, std::size_t num_topics,
                            double alpha_sum, double beta, Rng& rng);

// Rebuilds the counts implied by z and compares; throws TopicError on mismatch.
void check_consistency(const TopicState& state, std::span<const Document> docs);

// Normalized collapsed conditional for one token of word w in document d,
// using the counts as they stand (the caller removes the token first).
void topic_conditional(const TopicState& state, std::size_t d, WordId w, std::span<double> out);

void gibbs_sweep(TopicState& state, std::span<const Document> docs, Rng& rng);

// log p(w, z | alpha, beta) under the collapsed model.
double log_likelihood(const TopicState& state);

// ---------------------------------------------------------------------------
// Hyperparameter optimization

// Sparse histogram: (value, number of observations with that value), value > 0.
using Histogram = std::vector<std::pair<std::int64_t, std::size_t>>;

struct AlphaHistograms {
  std::vector<Histogram> topic_counts;  // per topic, over documents
  Histogram doc_lengths;
  std::size_t num_docs = 0;
};

struct BetaHistograms {
  Histogram word_counts;   // over all (topic, word) cells
  Histogram topic_totals;  // over topics
  std::size_t num_topics = 0;
};

AlphaHistograms alpha_histograms(const TopicState& state);
BetaHistograms beta_histograms(const TopicState& state);

struct FitReport {
  std::size_t iterations = 0;
  bool converged = false;
  bool reverted = false;  // non-finite intermediate, previous value kept
};

inline constexpr double kMinHyperparameter = 1e-5;
inline constexpr double kFitTolerance = 1e-5;
inline constexpr std::size_t kMaxFitIterations = 1000;

// Fixed-point Dirichlet maximum likelihood on digamma sums, in place.
FitReport optimize_alpha(std::vector<double>& alpha, const AlphaHistograms& h);
FitReport optimize_beta(double& beta, std::size_t vocab_size, const BetaHistograms& h);

FitReport optimize_alpha(TopicState& state);
FitReport optimize_beta(TopicState& state);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  std::size_t num_topics = 65;
  std::size_t sweeps = 1000;
  std::size_t burn_in = 50;
  std::size_t optimize_interval = 10;  // 0 disables optimization
  double alpha_sum = 5.0;
  double beta = 0.01;
  std::uint64_t seed = 1;
};

struct TrainResult {
  TopicState state;
  std::vector<double> log_likelihood;  // after each sweep
  std::size_t optimizations = 0;
};

// Called after every sweep with the 1-based sweep number.
using SweepObserver = std::function<void(std::size_t sweep, const TopicState&)>;

TrainResult train(std::span<const Document> docs, std::size_t vocab_size, const TrainConfig& config,
                  const SweepObserver& observer = {});

// ---------------------------------------------------------------------------
// Trained model summary: what gets persisted and inspected.

struct TopicModel {
  std::size_t num_topics = 0;
  std::vector<double> alpha;
  double beta = 0.0;
  std::uint64_t seed = 0;
  std::size_t sweeps = 0;
  std::vector<std::string> vocabulary;
  std::vector<std::int64_t> topic_word;        // K x V
  std::vector<std::vector<double>> doc_topic;  // D x K smoothed proportions
  std::vector<std::size_t> doc_lengths;
  std::vector<std::size_t> doc_novel;
  std::vector<std::string> novel_ids;
  std::vector<double> log_likelihood;
};

// (n_dk + alpha_k) / (len_d + sum alpha).
std::vector<std::vector<double>> document_topic_proportions(const TopicState& state);

TopicModel summarize(const TrainResult& result, const EncodedCorpus& corpus, std::size_t sweeps);

void save_model(const std::filesystem::path& path, const TopicModel& model);
TopicModel load_model(const std::filesystem::path& path);

// Top n words of topic k by count, ties broken lexicographically.
std::vector<std::pair<std::string, std::int64_t>> top_words(const TopicModel& model, std::size_t topic,
                                                            std::size_t n = 10);

struct NovelTopicProminence {
  std::string novel_id;
  std::vector<double> percent;  // K entries summing to 100
};

// Unweighted mean of segment proportions per novel, x100. Novels without
// segments are skipped with a warning.
std::vector<NovelTopicProminence> novel_prominence(const std::vector<std::vector<double>>& doc_topic,
                                                   std::span<const std::size_t> doc_novel,
                                                   std::span<const std::string> novel_ids);

stats::Correlation topic_correlation(std::span<const NovelTopicProminence> prominence, std::size_t topic_a,
                                     std::size_t topic_b);

// CSV "topic_index,label".
std::unordered_map<std::size_t, std::string> read_topic_labels(const std::filesystem::path& path);

}  // namespace godspell::topics
