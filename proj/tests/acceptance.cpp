// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "godspell/annotate.hpp"
#include "godspell/corpus.hpp"
#include "godspell/eval.hpp"
#include "godspell/report.hpp"
#include "godspell/stats.hpp"
#include "godspell/topics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace godspell;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects failed sub-checks for one criterion.
struct Criterion {
  std::vector<std::string> failures;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s: got %.12g, want %.12g +- %g", what.c_str(), got, want, tol);
      failures.emplace_back(buf);
    }
  }
};

int failed = 0;

void verdict(int number, const std::string& name, const std::function<void(Criterion&)>& body) {
  Criterion c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  const bool ok = c.failures.empty();
  if (!ok) ++failed;
  std::cout << (ok ? "PASS" : "FAIL") << " " << number << " " << name;
  const auto d = c.detail.str();
  if (!d.empty()) std::cout << " (" << d << ")";
  std::cout << "\n";
  for (const auto& f : c.failures) std::cout << "    " << f << "\n";
  std::cout.flush();
}

eval::ReliabilityData two_coders(const std::vector<std::pair<eval::Label, eval::Label>>& pairs) {
  eval::ReliabilityData d;
  d.annotators = {"a", "b"};
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    d.items.push_back("p" + std::to_string(i));
    d.labels.push_back({pairs[i].first, pairs[i].second});
  }
  return d;
}

// ---------------------------------------------------------------------------

void alpha_criterion(Criterion& c) {
  using eval::Label;
  const auto start = Clock::now();
  const double perfect = eval::krippendorff_alpha(
      two_coders({{Label::yes, Label::yes}, {Label::no, Label::no}, {Label::yes, Label::yes}, {Label::no, Label::no}}));
  const double example = eval::krippendorff_alpha(
      two_coders({{Label::yes, Label::yes}, {Label::no, Label::no}, {Label::yes, Label::no}, {Label::no, Label::no}}));
  const double elapsed = seconds_since(start);
  c.near(perfect, 1.0, 1e-12, "perfect agreement");
  c.near(example, 8.0 / 15.0, 1e-9, "(Y,Y),(N,N),(Y,N),(N,N)");
  c.expect(elapsed < 1.0, "runtime over 1 s");
  c.detail << "alpha=" << example;
}

void f1_criterion(Criterion& c) {
  const double a = eval::f1_score(0.52, 0.84);
  const double b = eval::f1_score(0.97, 0.87);
  c.near(a, 0.64, 0.005, "F1(0.52, 0.84)");
  c.near(b, 0.92, 0.005, "F1(0.97, 0.87)");
  eval::Confusion m;
  m.tp = 228;
  m.fn = 44;
  m.fp = 210;
  m.tn = 1469;
  const double micro = eval::prf(m).micro_f1;
  c.near(micro, 0.87, 0.01, "micro-F1 from confusion");
  c.detail << "F1=" << a << "," << b << " micro=" << micro;
}

void stats_criterion(Criterion& c) {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  c.near(stats::pearson(x, y).r, 0.8, 1e-12, "pearson r");

  std::size_t pairs = 0;
  double worst_p = 0, worst_cdf = 0;
  const double dfs[] = {1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 40, 60, 100, 200, 500, 1000, 0.5, 1.5, 2.5, 7.3};
  for (double df : dfs) {
    for (int i = -22; i <= 22; ++i) {
      const double t = 0.4 * i + 0.013 * (i % 4);
      worst_p = std::max(worst_p, static_cast<double>(std::fabs(stats::t_two_sided_p(t, df) - oracle::t_two_sided(t, df))));
      worst_cdf = std::max(worst_cdf, static_cast<double>(std::fabs(stats::t_cdf(t, df) - oracle::t_cdf(t, df))));
      ++pairs;
    }
  }
  c.expect(pairs >= 1000, "fewer than 1000 (t, df) pairs");
  c.expect(worst_p < 1e-6, "p-value vs quadrature: " + std::to_string(worst_p));
  c.expect(worst_cdf < 1e-10, "t_cdf vs quadrature: " + std::to_string(worst_cdf));

  const std::vector<double> a{1, 2, 3}, b{2, 3, 4};
  const auto r = stats::ttest_ind(a, b);
  c.near(r.statistic, -1.2247, 1e-4, "ttest t");
  c.near(r.df, 4.0, 0.0, "ttest df");
  c.near(r.p_two_sided, 0.288, 1e-3, "ttest p");
  c.near(r.p_two_sided, static_cast<double>(oracle::t_two_sided(r.statistic, 4)), 1e-4, "ttest p vs quadrature");

  c.near(stats::t_cdf(1.0, 1.0), 0.75, 1e-12, "t_cdf(1, df=1)");
  double worst_normal = 0;
  for (double t = -4; t <= 4; t += 0.25) {
    worst_normal = std::max(worst_normal, static_cast<double>(std::fabs(stats::t_cdf(t, 1000) - oracle::normal_cdf(t))));
  }
  c.expect(worst_normal < 1e-3, "df=1000 vs normal: " + std::to_string(worst_normal));
  c.detail << pairs << " pairs, max |dp|=" << worst_p << ", max |dcdf|=" << worst_cdf;
}

// Two disjoint vocabularies: words 0..49 in the first 100 docs, 50..99 in the rest.
std::vector<topics::Document> two_vocab_docs(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<topics::Document> docs(200);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const topics::WordId base = d < 100 ? 0 : 50;
    for (int i = 0; i < 50; ++i) docs[d].push_back(base + static_cast<topics::WordId>(rng() % 50));
  }
  return docs;
}

void lda_criterion(Criterion& c) {
  const auto start = Clock::now();
  const auto docs = two_vocab_docs(11);
  const std::size_t tokens = topics::token_count(docs);

  topics::TrainConfig cfg;
  cfg.num_topics = 2;
  cfg.sweeps = 200;
  cfg.seed = 5;
  std::size_t conservation_failures = 0;
  const auto result = topics::train(docs, 100, cfg, [&](std::size_t, const topics::TopicState& s) {
    try {
      topics::check_consistency(s, docs);
    } catch (const topics::TopicError&) {
      ++conservation_failures;
    }
    const auto total = std::accumulate(s.topic_total.begin(), s.topic_total.end(), std::int64_t{0});
    if (static_cast<std::size_t>(total) != tokens) ++conservation_failures;
  });
  c.expect(conservation_failures == 0, "token conservation violated");

  std::size_t dominant[2] = {0, 0};
  for (int half = 0; half < 2; ++half) {
    std::size_t in_topic[2] = {0, 0};
    for (std::size_t w = half * 50; w < half * 50 + 50; ++w) {
      ++in_topic[result.state.n_kw(0, w) >= result.state.n_kw(1, w) ? 0 : 1];
    }
    dominant[half] = in_topic[0] >= in_topic[1] ? 0 : 1;
    const double frac = std::max(in_topic[0], in_topic[1]) / 50.0;
    c.expect(frac >= 0.95, "vocabulary " + std::to_string(half) + " dominant fraction " + std::to_string(frac));
    c.detail << "vocab" << half << "=" << frac << " ";
  }
  c.expect(dominant[0] != dominant[1], "both vocabularies share a dominant topic");

  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    topics::TrainConfig s = cfg;
    s.sweeps = 50;
    s.seed = seed;
    const auto run = topics::train(two_vocab_docs(100 + seed), 100, s);
    if (run.log_likelihood[49] > run.log_likelihood[0]) ++improved;
  }
  c.expect(improved >= 18, "log-likelihood improved for " + std::to_string(improved) + "/20 seeds");
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 120.0, "runtime over 2 min");
  c.detail << "ll improved " << improved << "/20, " << elapsed << " s";
}

void downsample_criterion(Criterion& c) {
  // Word 0 is 4% of novel A and absent elsewhere; words 1..100 are filler.
  std::mt19937_64 rng(17);
  std::vector<topics::Document> docs;
  std::vector<std::size_t> doc_novel;
  for (std::size_t novel = 0; novel < 4; ++novel) {
    topics::Document all;
    for (int i = 0; i < 10000; ++i) {
      if (novel == 0 && i < 400) {
        all.push_back(0);
      } else {
        all.push_back(1 + static_cast<topics::WordId>(i % 100));
      }
    }
    std::shuffle(all.begin(), all.end(), rng);
    for (std::size_t d = 0; d < 10; ++d) {
      docs.emplace_back(all.begin() + d * 1000, all.begin() + (d + 1) * 1000);
      doc_novel.push_back(novel);
    }
  }
  const double corpus_rate = 400.0 / 40000.0;
  const auto out = topics::authorless_downsample(docs, doc_novel, 101, 23);

  bool increased = false;
  std::size_t a_tokens = 0, a_w = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::vector<std::size_t> before(101), after(101);
    for (auto w : docs[d]) ++before[w];
    for (auto w : out[d]) ++after[w];
    for (std::size_t w = 0; w < 101; ++w) increased |= after[w] > before[w];
    if (doc_novel[d] == 0) {
      a_tokens += out[d].size();
      a_w += after[0];
    }
  }
  const double rate = static_cast<double>(a_w) / static_cast<double>(a_tokens);
  c.expect(!increased, "a count increased");
  c.expect(std::fabs(rate - corpus_rate) <= 0.2 * corpus_rate, "novel A rate " + std::to_string(rate));
  c.detail << "rate " << rate << " vs corpus " << corpus_rate;
}

// Delegates to a backend, records prompts, and dies after `limit` calls.
class Killable : public annotate::ModelBackend {
 public:
  Killable(annotate::ModelBackend& inner, std::size_t limit) : inner_(inner), limit_(limit) {}
  std::string complete(const annotate::CompletionRequest& r) override {
    {
      std::lock_guard lock(m_);
      if (served_.size() >= limit_) throw std::runtime_error("killed");
      served_.push_back(r.prompt_name + "\n" + r.prompt);
    }
    return inner_.complete(r);
  }
  std::vector<std::string> served() const { return served_; }

 private:
  annotate::ModelBackend& inner_;
  std::size_t limit_;
  std::mutex m_;
  std::vector<std::string> served_;
};

std::string dump_all(const std::vector<annotate::ActAnnotation>& records) {
  std::string s;
  for (const auto& r : records) s += annotate::to_json(r).dump() + "\n";
  return s;
}

void pipeline_criterion(Criterion& c) {
  const auto passages = corpus::read_passages(support::fixtures() / "pipeline" / "passages.jsonl");
  c.expect(passages.size() == 30, "fixture has " + std::to_string(passages.size()) + " passages");
  const auto registry = annotate::PromptRegistry::defaults();
  annotate::ModelConfig config;
  config.model = "mock";
  annotate::PipelineOptions options;
  options.workers = 1;
  options.sleep = [](std::chrono::milliseconds) {};

  support::TempDir full_dir("accept-full");
  annotate::ResponseCache full_cache(full_dir.path());
  auto full_model = annotate::MockModel::builtin();
  const auto full = annotate::run_pipeline(passages, full_model, config, registry, full_cache, options);

  std::size_t s1_yes = 0, final_yes = 0;
  bool conjunction = true;
  for (const auto& r : full) {
    const bool a = r.stage1 && r.stage1->label == annotate::Verdict::yes;
    const bool b = r.stage2 && r.stage2->label == annotate::Verdict::yes;
    s1_yes += a;
    final_yes += r.final_label == annotate::Verdict::yes;
    conjunction &= (r.final_label == annotate::Verdict::yes) == (a && b);
  }
  const std::size_t s2_calls = full_model.calls(annotate::kSupernaturalPrompt);
  c.expect(conjunction, "final YES differs from stage1 AND stage2");
  c.expect(s2_calls == s1_yes, "stage-2 calls " + std::to_string(s2_calls) + " vs stage-1 YES " + std::to_string(s1_yes));

  // Kill mid-batch, then resume with a fresh model on the same cache.
  support::TempDir dir("accept-resume");
  annotate::ResponseCache cache(dir.path());
  auto first_model = annotate::MockModel::builtin();
  const std::size_t limit = full_model.calls() / 2;
  Killable killable(first_model, limit);
  bool killed = false;
  try {
    annotate::run_pipeline(passages, killable, config, registry, cache, options);
  } catch (const std::runtime_error& e) {
    killed = std::string(e.what()) == "killed";
  }
  c.expect(killed, "first run was not interrupted");

  auto second_model = annotate::MockModel::builtin();
  Killable recorder(second_model, static_cast<std::size_t>(-1));
  const auto resumed = annotate::run_pipeline(passages, recorder, config, registry, cache, options);
  c.expect(dump_all(resumed) == dump_all(full), "resumed output differs from an uninterrupted run");

  const auto before = killable.served();
  const std::multiset<std::string> first(before.begin(), before.end());
  std::size_t repeated = 0;
  for (const auto& p : recorder.served()) repeated += first.count(p);
  c.expect(repeated == 0, std::to_string(repeated) + " repeated calls after resume");
  c.expect(before.size() + recorder.served().size() == full_model.calls(), "call totals do not add up");
  c.detail << s1_yes << " stage-1 YES, " << final_yes << " final YES, killed after " << before.size() << " of "
           << full_model.calls() << " calls, " << repeated << " repeated";
}

std::set<fs::path> files_under(const fs::path& root, bool skip_cache) {
  std::set<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root);
    if (skip_cache && *rel.begin() == "cache") continue;
    out.insert(rel);
  }
  return out;
}

void golden_criterion(Criterion& c) {
  const auto start = Clock::now();
  const auto fixture = support::fixtures() / "golden";
  support::TempDir out("accept-golden");
  std::ostringstream sink;
  for (const char* cmd : {"segment", "topics-train", "topics-inspect", "annotate", "eval", "stats", "report"}) {
    const int code = report::run_cli(
        {cmd, "--config", (fixture / "run.json").string(), "--out", out.path().string(), "--quiet"}, sink, sink);
    c.expect(code == 0, std::string(cmd) + " exited " + std::to_string(code));
  }
  const auto want = files_under(fixture / "expected", false);
  const auto got = files_under(out.path(), true);
  c.expect(want == got, "file sets differ");
  std::size_t same = 0;
  for (const auto& f : want) {
    if (support::read_file(fixture / "expected" / f) == support::read_file(out.path() / f)) {
      ++same;
    } else {
      c.failures.push_back("differs: " + f.string());
    }
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 300.0, "runtime over 5 min");
  c.detail << same << "/" << want.size() << " files identical, " << elapsed << " s";
}

std::string fuzz_text(std::mt19937& rng) {
  std::uniform_int_distribution<int> paragraphs(0, 10), sentences(1, 8), sentence_len(1, 60), coin(0, 9);
  static const char* gaps[] = {"\n\n", "\n  \n", "\r\n\r\n", "\n\n\n\n", "\n\t\n"};
  static const char* enders[] = {".", "!", "?", "\"", ","};
  std::string text;
  if (coin(rng) == 0) text += "\n\n ";
  const int np = paragraphs(rng);
  for (int p = 0; p < np; ++p) {
    if (p) text += gaps[rng() % 5];
    const int ns = sentences(rng);
    for (int s = 0; s < ns; ++s) {
      const int len = coin(rng) == 0 ? 400 : sentence_len(rng);
      for (int w = 0; w < len; ++w) {
        if (s || w) text += coin(rng) == 0 ? "\n" : (coin(rng) == 0 ? "\t " : " ");
        text += "x" + std::to_string(rng() % 500);
        if (w + 1 == len) text += enders[rng() % 5];
      }
    }
  }
  if (coin(rng) < 3) text += " \n";
  return text;
}

void segmentation_criterion(Criterion& c) {
  std::mt19937 rng(8128);
  std::size_t bad = 0, passages = 0;
  for (int i = 0; i < 1000; ++i) {
    corpus::Novel novel;
    novel.id = "fz";
    novel.text = fuzz_text(rng);
    const std::size_t cap = 1 + rng() % 200;
    const auto words = corpus::word_tokenize(novel.text);
    const auto out = corpus::segment_capped(novel, cap);
    passages += out.size();

    std::vector<std::string> joined;
    bool ok = true;
    std::size_t next = 0;
    double last_pos = -1.0;
    std::size_t search_from = 0;
    for (std::size_t k = 0; k < out.size(); ++k) {
      const auto& p = out[k];
      const auto pw = corpus::word_tokenize(p.text);
      joined.insert(joined.end(), pw.begin(), pw.end());
      ok &= p.index == k && p.word_start == next && p.word_end == p.word_start + p.word_count;
      ok &= pw.size() == p.word_count && p.word_count >= 1 && p.word_count <= cap;
      ok &= p.normalized_position > last_pos && p.normalized_position >= 0.0 && p.normalized_position <= 1.0;
      const auto at = novel.text.find(p.text, search_from);
      ok &= at != std::string::npos;
      if (at != std::string::npos) search_from = at + p.text.size();
      next = p.word_end;
      last_pos = p.normalized_position;
    }
    ok &= joined == words && next == words.size();
    if (!ok) ++bad;
  }
  c.expect(bad == 0, std::to_string(bad) + " of 1000 cases violate an invariant");
  c.detail << "1000 cases, " << passages << " passages";
}

}  // namespace

int main() {
  verdict(1, "krippendorff alpha", alpha_criterion);
  verdict(2, "F1 and micro-F1", f1_criterion);
  verdict(3, "pearson, t distribution, t-test", stats_criterion);
  verdict(4, "LDA recovers disjoint vocabularies", lda_criterion);
  verdict(5, "authorless downsampling", downsample_criterion);
  verdict(6, "mock pipeline conjunction and resume", pipeline_criterion);
  verdict(7, "golden CLI run", golden_criterion);
  verdict(8, "segmentation fuzz", segmentation_criterion);
  return failed == 0 ? 0 : 1;
}
