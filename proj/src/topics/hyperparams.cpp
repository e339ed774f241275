#include <algorithm>
#include <cmath>
#include <map>

#include "godspell/log.hpp"
#include "godspell/topics.hpp"

namespace godspell::topics {
namespace {

Histogram to_histogram(const std::map<std::int64_t, std::size_t>& m) { return {m.begin(), m.end()}; }

// sum over observations of digamma(n + x) - digamma(x); zero counts add nothing.
double digamma_sum(const Histogram& h, double x) {
  const double base = stats::digamma(x);
  double s = 0.0;
  for (const auto& [n, count] : h) s += static_cast<double>(count) * (stats::digamma(static_cast<double>(n) + x) - base);
  return s;
}

}  // namespace

AlphaHistograms alpha_histograms(const TopicState& s) {
  AlphaHistograms h;
  h.num_docs = s.num_docs();
  std::vector<std::map<std::int64_t, std::size_t>> per_topic(s.num_topics);
  std::map<std::int64_t, std::size_t> lengths;
  for (std::size_t d = 0; d < s.num_docs(); ++d) {
    for (std::size_t k = 0; k < s.num_topics; ++k) {
      if (auto n = s.n_dk(d, k); n > 0) ++per_topic[k][n];
    }
    if (!s.z[d].empty()) ++lengths[static_cast<std::int64_t>(s.z[d].size())];
  }
  for (const auto& m : per_topic) h.topic_counts.push_back(to_histogram(m));
  h.doc_lengths = to_histogram(lengths);
  return h;
}

BetaHistograms beta_histograms(const TopicState& s) {
  BetaHistograms h;
  h.num_topics = s.num_topics;
  std::map<std::int64_t, std::size_t> cells, totals;
  for (auto n : s.topic_word) {
    if (n > 0) ++cells[n];
  }
  for (auto n : s.topic_total) {
    if (n > 0) ++totals[n];
  }
  h.word_counts = to_histogram(cells);
  h.topic_totals = to_histogram(totals);
  return h;
}

// alpha_k <- alpha_k * sum_d [psi(n_dk + alpha_k) - psi(alpha_k)]
//                    / sum_d [psi(len_d + A) - psi(A)],   A = sum_k alpha_k
FitReport optimize_alpha(std::vector<double>& alpha, const AlphaHistograms& h) {
  if (h.topic_counts.size() != alpha.size()) throw TopicError("optimize_alpha: histogram/alpha size mismatch");
  FitReport report;
  const auto previous = alpha;
  std::vector<double> next(alpha.size());

  for (report.iterations = 1; report.iterations <= kMaxFitIterations; ++report.iterations) {
    double a_sum = 0.0;
    for (double a : alpha) a_sum += a;
    const double denom = digamma_sum(h.doc_lengths, a_sum);

    double max_change = 0.0;
    bool finite = std::isfinite(denom) && denom > 0.0;
    for (std::size_t k = 0; finite && k < alpha.size(); ++k) {
      next[k] = std::max(kMinHyperparameter, alpha[k] * digamma_sum(h.topic_counts[k], alpha[k]) / denom);
      finite = std::isfinite(next[k]);
      if (finite) max_change = std::max(max_change, std::fabs(next[k] - alpha[k]) / alpha[k]);
    }
    if (!finite) {
      alpha = previous;
      report.reverted = true;
      log::warn("alpha optimization produced a non-finite value; keeping previous alpha");
      return report;
    }
    alpha = next;
    if (max_change < kFitTolerance) {
      report.converged = true;
      return report;
    }
  }
  report.iterations = kMaxFitIterations;
  return report;
}

// beta <- beta * sum_{k,w} [psi(n_kw + beta) - psi(beta)]
//              / (V * sum_k [psi(n_k + V beta) - psi(V beta)])
FitReport optimize_beta(double& beta, std::size_t vocab_size, const BetaHistograms& h) {
  FitReport report;
  const double previous = beta;
  const double V = static_cast<double>(vocab_size);

  for (report.iterations = 1; report.iterations <= kMaxFitIterations; ++report.iterations) {
    const double numer = digamma_sum(h.word_counts, beta);
    const double denom = V * digamma_sum(h.topic_totals, V * beta);
    const double next = std::max(kMinHyperparameter, beta * numer / denom);
    if (!std::isfinite(next) || !(denom > 0.0)) {
      beta = previous;
      report.reverted = true;
      log::warn("beta optimization produced a non-finite value; keeping previous beta");
      return report;
    }
    const double change = std::fabs(next - beta) / beta;
    beta = next;
    if (change < kFitTolerance) {
      report.converged = true;
      return report;
    }
  }
  report.iterations = kMaxFitIterations;
  return report;
}

FitReport optimize_alpha(TopicState& state) { return optimize_alpha(state.alpha, alpha_histograms(state)); }

FitReport optimize_beta(TopicState& state) {
  return optimize_beta(state.beta, state.vocab_size, beta_histograms(state));
}

}  // namespace godspell::topics
