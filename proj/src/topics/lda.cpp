#include <algorithm>
#include <cmath>
#include <numeric>

#include "godspell/log.hpp"
#include "godspell/topics.hpp"

namespace godspell::topics {

double TopicState::alpha_sum() const { return std::accumulate(alpha.begin(), alpha.end(), 0.0); }

TopicState initialize_state(std::span<const Document> docs, std::size_t vocab_size, std::size_t num_topics,
                            double alpha_sum, double beta, Rng& rng) {
  if (num_topics == 0) throw TopicError("number of topics must be >= 1");
  if (!(alpha_sum > 0.0) || !(beta > 0.0)) throw TopicError("alpha and beta must be positive");

  TopicState s;
  s.num_topics = num_topics;
  s.vocab_size = vocab_size;
  s.alpha.assign(num_topics, alpha_sum / static_cast<double>(num_topics));
  s.beta = beta;
  s.doc_topic.assign(docs.size() * num_topics, 0);
  s.topic_word.assign(num_topics * vocab_size, 0);
  s.topic_total.assign(num_topics, 0);
  s.z.resize(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    s.z[d].resize(docs[d].size());
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const WordId w = docs[d][i];
      if (w >= vocab_size) throw TopicError("word id " + std::to_string(w) + " outside vocabulary");
      const auto k = static_cast<std::uint32_t>(rng.below(num_topics));
      s.z[d][i] = k;
      ++s.n_dk(d, k);
      ++s.n_kw(k, w);
      ++s.topic_total[k];
    }
  }
  return s;
}

void check_consistency(const TopicState& s, std::span<const Document> docs) {
  const std::size_t K = s.num_topics;
  const std::size_t V = s.vocab_size;
  auto fail = [](const std::string& what) { throw TopicError("corrupted topic state: " + what); };

  if (s.alpha.size() != K) fail("alpha has wrong length");
  for (double a : s.alpha) {
    if (!(a > 0.0)) fail("non-positive alpha");
  }
  if (!(s.beta > 0.0)) fail("non-positive beta");
  if (s.z.size() != docs.size() || s.doc_topic.size() != docs.size() * K || s.topic_word.size() != K * V ||
      s.topic_total.size() != K) {
    fail("count arrays do not match dimensions");
  }

  std::vector<std::int64_t> dk(docs.size() * K, 0), kw(K * V, 0), tk(K, 0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (s.z[d].size() != docs[d].size()) fail("assignment length differs from document " + std::to_string(d));
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const auto k = s.z[d][i];
      if (k >= K) fail("assignment out of range");
      ++dk[d * K + k];
      ++kw[k * V + docs[d][i]];
      ++tk[k];
    }
  }
  if (dk != s.doc_topic) fail("document-topic counts disagree with assignments");
  if (kw != s.topic_word) fail("topic-word counts disagree with assignments");
  if (tk != s.topic_total) fail("topic totals disagree with assignments");
}

void topic_conditional(const TopicState& s, std::size_t d, WordId w, std::span<double> out) {
  const double vbeta = static_cast<double>(s.vocab_size) * s.beta;
  double total = 0.0;
  for (std::size_t k = 0; k < s.num_topics; ++k) {
    out[k] = (static_cast<double>(s.n_dk(d, k)) + s.alpha[k]) * (static_cast<double>(s.n_kw(k, w)) + s.beta) /
             (static_cast<double>(s.topic_total[k]) + vbeta);
    total += out[k];
  }
  for (std::size_t k = 0; k < s.num_topics; ++k) out[k] /= total;
}

void gibbs_sweep(TopicState& s, std::span<const Document> docs, Rng& rng) {
  check_consistency(s, docs);

  const std::size_t K = s.num_topics;
  const double vbeta = static_cast<double>(s.vocab_size) * s.beta;
  std::vector<double> cumulative(K);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::int64_t* dk = &s.doc_topic[d * K];
    for (std::size_t i = 0; i < docs[d].size(); ++i) {
      const WordId w = docs[d][i];
      const auto old = s.z[d][i];
      --dk[old];
      --s.n_kw(old, w);
      --s.topic_total[old];

      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        total += (static_cast<double>(dk[k]) + s.alpha[k]) * (static_cast<double>(s.n_kw(k, w)) + s.beta) /
                 (static_cast<double>(s.topic_total[k]) + vbeta);
        cumulative[k] = total;
      }
      const double u = rng.uniform() * total;
      std::size_t k = 0;
      while (k + 1 < K && cumulative[k] <= u) ++k;

      s.z[d][i] = static_cast<std::uint32_t>(k);
      ++dk[k];
      ++s.n_kw(k, w);
      ++s.topic_total[k];
    }
  }
}

double log_likelihood(const TopicState& s) {
  const std::size_t K = s.num_topics;
  const std::size_t V = s.vocab_size;
  const double vbeta = static_cast<double>(V) * s.beta;
  const double lg_beta = std::lgamma(s.beta);

  double ll = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    ll += std::lgamma(vbeta) - std::lgamma(static_cast<double>(s.topic_total[k]) + vbeta);
    for (std::size_t w = 0; w < V; ++w) {
      const auto n = s.n_kw(k, w);
      if (n > 0) ll += std::lgamma(static_cast<double>(n) + s.beta) - lg_beta;
    }
  }

  const double a_sum = s.alpha_sum();
  std::vector<double> lg_alpha(K);
  for (std::size_t k = 0; k < K; ++k) lg_alpha[k] = std::lgamma(s.alpha[k]);
  for (std::size_t d = 0; d < s.num_docs(); ++d) {
    ll += std::lgamma(a_sum) - std::lgamma(static_cast<double>(s.z[d].size()) + a_sum);
    for (std::size_t k = 0; k < K; ++k) {
      const auto n = s.n_dk(d, k);
      if (n > 0) ll += std::lgamma(static_cast<double>(n) + s.alpha[k]) - lg_alpha[k];
    }
  }
  return ll;
}

TrainResult train(std::span<const Document> docs, std::size_t vocab_size, const TrainConfig& config,
                  const SweepObserver& observer) {
  if (config.num_topics == 0) throw TopicError("number of topics must be >= 1");

  Rng rng(config.seed);
  TrainResult result;
  result.state = initialize_state(docs, vocab_size, config.num_topics, config.alpha_sum, config.beta, rng);
  result.state.rng_seed = config.seed;
  result.log_likelihood.reserve(config.sweeps);

  for (std::size_t sweep = 1; sweep <= config.sweeps; ++sweep) {
    gibbs_sweep(result.state, docs, rng);
    if (config.optimize_interval > 0 && sweep > config.burn_in && sweep % config.optimize_interval == 0) {
      optimize_alpha(result.state);
      optimize_beta(result.state);
      ++result.optimizations;
    }
    result.log_likelihood.push_back(log_likelihood(result.state));
    if (observer) observer(sweep, result.state);
  }
  return result;
}

std::vector<std::vector<double>> document_topic_proportions(const TopicState& s) {
  const double a_sum = s.alpha_sum();
  std::vector<std::vector<double>> out(s.num_docs(), std::vector<double>(s.num_topics));
  for (std::size_t d = 0; d < s.num_docs(); ++d) {
    const double denom = static_cast<double>(s.z[d].size()) + a_sum;
    for (std::size_t k = 0; k < s.num_topics; ++k) {
      out[d][k] = (static_cast<double>(s.n_dk(d, k)) + s.alpha[k]) / denom;
    }
  }
  return out;
}

TopicModel summarize(const TrainResult& result, const EncodedCorpus& corpus, std::size_t sweeps) {
  const auto& s = result.state;
  TopicModel m;
  m.num_topics = s.num_topics;
  m.alpha = s.alpha;
  m.beta = s.beta;
  m.seed = s.rng_seed;
  m.sweeps = sweeps;
  m.vocabulary = corpus.vocab.words;
  m.topic_word = s.topic_word;
  m.doc_topic = document_topic_proportions(s);
  for (const auto& z : s.z) m.doc_lengths.push_back(z.size());
  m.doc_novel = corpus.doc_novel;
  m.novel_ids = corpus.novel_ids;
  m.log_likelihood = result.log_likelihood;
  return m;
}

std::vector<std::pair<std::string, std::int64_t>> top_words(const TopicModel& model, std::size_t topic,
                                                            std::size_t n) {
  if (topic >= model.num_topics) {
    throw TopicError("topic " + std::to_string(topic) + " out of range (K=" + std::to_string(model.num_topics) + ")");
  }
  const std::size_t V = model.vocabulary.size();
  std::vector<std::size_t> order(V);
  std::iota(order.begin(), order.end(), 0);
  const auto* row = &model.topic_word[topic * V];
  const auto better = [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return model.vocabulary[a] < model.vocabulary[b];
  };
  const std::size_t take = std::min(n, V);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);

  std::vector<std::pair<std::string, std::int64_t>> out;
  for (std::size_t i = 0; i < take; ++i) out.emplace_back(model.vocabulary[order[i]], row[order[i]]);
  return out;
}

std::vector<NovelTopicProminence> novel_prominence(const std::vector<std::vector<double>>& doc_topic,
                                                   std::span<const std::size_t> doc_novel,
                                                   std::span<const std::string> novel_ids) {
  if (doc_topic.size() != doc_novel.size()) throw TopicError("novel_prominence: doc_topic and doc_novel differ");
  const std::size_t K = doc_topic.empty() ? 0 : doc_topic.front().size();

  std::vector<std::vector<double>> sums(novel_ids.size(), std::vector<double>(K, 0.0));
  std::vector<std::size_t> counts(novel_ids.size(), 0);
  for (std::size_t d = 0; d < doc_topic.size(); ++d) {
    const auto b = doc_novel[d];
    if (b >= novel_ids.size()) throw TopicError("novel_prominence: novel index out of range");
    for (std::size_t k = 0; k < K; ++k) sums[b][k] += doc_topic[d][k];
    ++counts[b];
  }

  std::vector<NovelTopicProminence> out;
  for (std::size_t b = 0; b < novel_ids.size(); ++b) {
    if (counts[b] == 0) {
      log::warn("novel '" + novel_ids[b] + "' has no segments; excluded from topic prominence");
      continue;
    }
    NovelTopicProminence p{novel_ids[b], std::vector<double>(K)};
    for (std::size_t k = 0; k < K; ++k) p.percent[k] = 100.0 * sums[b][k] / static_cast<double>(counts[b]);
    out.push_back(std::move(p));
  }
  return out;
}

stats::Correlation topic_correlation(std::span<const NovelTopicProminence> prominence, std::size_t topic_a,
                                     std::size_t topic_b) {
  std::vector<double> a, b;
  for (const auto& p : prominence) {
    if (topic_a >= p.percent.size() || topic_b >= p.percent.size()) throw TopicError("topic index out of range");
    a.push_back(p.percent[topic_a]);
    b.push_back(p.percent[topic_b]);
  }
  return stats::pearson(a, b);
}

}  // namespace godspell::topics
