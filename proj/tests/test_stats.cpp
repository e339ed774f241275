#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <numeric>
#include <random>

#include "godspell/analyses.hpp"
#include "godspell/log.hpp"
#include "godspell/stats.hpp"
#include "oracles.hpp"

using namespace godspell;
using namespace godspell::stats;
using annotate::ActAnnotation;
using annotate::Affect;
using annotate::Impact;
using annotate::Verdict;

namespace {

std::vector<std::pair<double, double>> t_grid() {
  std::vector<std::pair<double, double>> grid;
  const double dfs[] = {1, 2, 3, 4, 5, 7, 10, 15, 23, 30, 50, 100, 250, 1000, 0.5, 1.5, 2.5, 8.25, 40.7, 77.0};
  for (double df : dfs) {
    for (int i = -25; i <= 25; ++i) grid.emplace_back(0.37 * i + 0.011 * (i % 3), df);
  }
  return grid;
}

long double mean_ld(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return s / static_cast<long double>(v.size());
}

long double var_ld(const std::vector<double>& v) {
  const long double m = mean_ld(v);
  long double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<long double>(v.size() - 1);
}

corpus::Novel novel(std::string id, std::vector<corpus::Gender> genders, std::optional<std::string> series = {}) {
  corpus::Novel n;
  n.id = std::move(id);
  n.title = "Title " + n.id;
  n.year = 2000;
  for (auto g : genders) n.authors.push_back({"Author", g});
  n.series_tag = std::move(series);
  return n;
}

ActAnnotation act(const std::string& novel_id, std::size_t index, bool yes, std::optional<Affect> affect = {},
                  std::optional<Impact> impact = {}) {
  ActAnnotation a;
  a.novel_id = novel_id;
  a.index = index;
  a.passage = novel_id + ":" + std::to_string(index);
  a.stage1 = annotate::StageOne{"e", yes ? Verdict::yes : Verdict::no, "act", "who"};
  if (yes) a.stage2 = annotate::StageTwo{"e", Verdict::yes};
  a.final_label = yes ? Verdict::yes : Verdict::no;
  a.affect = affect;
  a.impact = impact;
  return a;
}

}  // namespace

// ---------------------------------------------------------------------------
// Distributions

TEST_CASE("t_cdf matches quadrature of the density") {
  const auto grid = t_grid();
  REQUIRE(grid.size() >= 1000);
  double worst_cdf = 0.0, worst_p = 0.0;
  for (const auto& [t, df] : grid) {
    const long double cdf = oracle::t_cdf(t, df);
    const long double p = oracle::t_two_sided(t, df);
    worst_cdf = std::max(worst_cdf, static_cast<double>(std::fabs(t_cdf(t, df) - cdf)));
    worst_p = std::max(worst_p, static_cast<double>(std::fabs(t_two_sided_p(t, df) - p)));
  }
  CHECK(worst_cdf < 1e-10);
  CHECK(worst_p < 1e-6);
}

TEST_CASE("t_cdf reference points") {
  CHECK(t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(t_cdf(0.0, 7.0) == 0.5);
  for (double t : {-3.0, -1.0, 0.5, 2.0}) {
    CHECK(std::fabs(t_cdf(t, 1000.0) - static_cast<double>(oracle::normal_cdf(t))) < 1e-3);
    CHECK(t_cdf(-t, 9.0) == doctest::Approx(1.0 - t_cdf(t, 9.0)).epsilon(1e-12));
  }
  CHECK(t_two_sided_p(std::numeric_limits<double>::infinity(), 3.0) == 0.0);
}

TEST_CASE("digamma identities") {
  constexpr double euler = 0.57721566490153286061;
  CHECK(digamma(1.0) == doctest::Approx(-euler).epsilon(1e-13));
  CHECK(digamma(0.5) == doctest::Approx(-euler - 2.0 * std::log(2.0)).epsilon(1e-13));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(1e-3, 50.0);
  for (int i = 0; i < 500; ++i) {
    const double x = u(rng);
    CHECK(digamma(x + 1.0) == doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-11));
    // Central difference of lgamma in long double as an independent check.
    const long double h = 1e-5L * std::max(1.0L, static_cast<long double>(x));
    const long double d = (std::lgamma(x + h) - std::lgamma(x - h)) / (2 * h);
    CHECK(digamma(x) == doctest::Approx(static_cast<double>(d)).epsilon(1e-6));
  }
}

TEST_CASE("incomplete beta matches quadrature") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ab(1.0, 12.0), ux(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double a = ab(rng), b = ab(rng), x = ux(rng);
    const long double logB = std::lgamma((long double)a) + std::lgamma((long double)b) - std::lgamma((long double)a + b);
    auto f = [&](long double s) {
      if (s <= 0 || s >= 1) return 0.0L;
      return std::exp((a - 1) * std::log(s) + (b - 1) * std::log1p(-s) - logB);
    };
    const auto expected = oracle::integrate(f, 0.0L, x, 1e-15L);
    CHECK(std::fabs(incomplete_beta(x, a, b) - static_cast<double>(expected)) < 1e-10);
  }
  CHECK(incomplete_beta(0.0, 2.0, 3.0) == 0.0);
  CHECK(incomplete_beta(1.0, 2.0, 3.0) == 1.0);
}

// ---------------------------------------------------------------------------
// Tests

TEST_CASE("pearson on a small example") {
  const std::vector<double> x{1, 2, 3, 4}, y{1, 3, 2, 4};
  const auto c = pearson(x, y);
  CHECK(std::fabs(c.r - 0.8) < 1e-12);
  CHECK(c.p_two_sided == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(c.n == 4);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), StatsError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), StatsError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), StatsError);
}

TEST_CASE("pearson properties on random data") {
  std::mt19937 rng(23);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 40;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = n01(rng);
      y[i] = 0.5 * x[i] + n01(rng);
    }
    const auto c = pearson(x, y);
    // Direct long double evaluation of the defining sums.
    const long double mx = mean_ld(x), my = mean_ld(y);
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    CHECK(std::fabs(c.r - static_cast<double>(sxy / std::sqrt(sxx * syy))) < 1e-12);
    CHECK(std::fabs(pearson(y, x).r - c.r) < 1e-12);
    std::vector<double> ax(n), ay(n);
    for (std::size_t i = 0; i < n; ++i) {
      ax[i] = 3.5 * x[i] - 7.0;
      ay[i] = -0.25 * y[i] + 100.0;
    }
    CHECK(std::fabs(pearson(ax, y).r - c.r) < 1e-12);
    CHECK(std::fabs(pearson(x, ay).r + c.r) < 1e-12);
    CHECK(c.r >= -1.0);
    CHECK(c.r <= 1.0);
    CHECK(c.p_two_sided >= 0.0);
    CHECK(c.p_two_sided <= 1.0);
  }
}

TEST_CASE("t-test on a small example") {
  const std::vector<double> a{1, 2, 3}, b{2, 3, 4};
  const auto r = ttest_ind(a, b);
  CHECK(r.statistic == doctest::Approx(-1.224744871391589).epsilon(1e-12));
  CHECK(r.df == 4.0);
  CHECK(std::fabs(r.p_two_sided - 0.2878641347266908) < 1e-4);
  CHECK(r.mean_a == 2.0);
  CHECK(r.n_b == 3);
  CHECK_THROWS_WITH_AS(ttest_ind(std::vector<double>{1}, b), doctest::Contains("at least 2"), StatsError);
}

TEST_CASE("t-test agrees with the textbook formulas") {
  std::mt19937 rng(29);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(2 + rng() % 15), b(2 + rng() % 15);
    for (auto& v : a) v = n01(rng);
    for (auto& v : b) v = 0.3 + 2.0 * n01(rng);
    const long double na = a.size(), nb = b.size();
    const long double va = var_ld(a), vb = var_ld(b);
    const long double diff = mean_ld(a) - mean_ld(b);

    const long double sp = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2);
    const long double t_student = diff / std::sqrt(sp * (1 / na + 1 / nb));
    const auto s = ttest_ind(a, b, true);
    CHECK(s.statistic == doctest::Approx(static_cast<double>(t_student)).epsilon(1e-10));
    CHECK(s.df == doctest::Approx(static_cast<double>(na + nb - 2)));
    CHECK(std::fabs(s.p_two_sided - static_cast<double>(oracle::t_two_sided(t_student, na + nb - 2))) < 1e-6);

    const long double se2 = va / na + vb / nb;
    const long double t_welch = diff / std::sqrt(se2);
    const long double df_welch =
        se2 * se2 / ((va / na) * (va / na) / (na - 1) + (vb / nb) * (vb / nb) / (nb - 1));
    const auto w = ttest_ind(a, b, false);
    CHECK(w.statistic == doctest::Approx(static_cast<double>(t_welch)).epsilon(1e-10));
    CHECK(w.df == doctest::Approx(static_cast<double>(df_welch)).epsilon(1e-10));
    CHECK(std::fabs(w.p_two_sided - static_cast<double>(oracle::t_two_sided(t_welch, df_welch))) < 1e-6);

    // Antisymmetry and translation invariance.
    const auto swapped = ttest_ind(b, a, true);
    CHECK(swapped.statistic == doctest::Approx(-s.statistic).epsilon(1e-12));
    CHECK(swapped.p_two_sided == doctest::Approx(s.p_two_sided).epsilon(1e-12));
    auto a2 = a, b2 = b;
    for (auto& v : a2) v += 12.5;
    for (auto& v : b2) v += 12.5;
    CHECK(ttest_ind(a2, b2).statistic == doctest::Approx(s.statistic).epsilon(1e-9));
  }
}

TEST_CASE("t-test with zero variance") {
  const auto r = ttest_ind(std::vector<double>{1, 1}, std::vector<double>{2, 2});
  CHECK(r.degenerate);
  CHECK(r.p_two_sided == 0.0);
  const auto same = ttest_ind(std::vector<double>{1, 1}, std::vector<double>{1, 1});
  CHECK(same.p_two_sided == 1.0);
  CHECK_FALSE(same.degenerate);
}

// ---------------------------------------------------------------------------
// Position density

TEST_CASE("uniform positions pass a chi-square goodness-of-fit test") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pos(10000);
  for (auto& p : pos) p = u(rng);
  const auto d = position_density(pos, 20);
  double chi2 = 0.0;
  for (auto c : d.counts) chi2 += (static_cast<double>(c) - 500.0) * (static_cast<double>(c) - 500.0) / 500.0;
  CHECK(chi2 < 36.191);  // df 19, 0.01 critical value
  CHECK(std::accumulate(d.counts.begin(), d.counts.end(), std::size_t{0}) == 10000);
}

TEST_CASE("density integrates to one") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> pos(1 + rng() % 300);
    for (auto& p : pos) p = std::pow(u(rng), 1.0 + trial % 4);
    if (trial % 10 == 0) pos.push_back(1.0);
    const auto d = position_density(pos, 1 + rng() % 30);
    double mass = 0.0;
    for (std::size_t b = 0; b < d.bins; ++b) mass += d.density[b] * (d.upper[b] - d.lower[b]);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d.upper.back() == 1.0);
  }
}

TEST_CASE("all acts at one position") {
  const std::vector<double> pos(7, 0.5);
  const auto d = position_density(pos, 20);
  CHECK(std::count_if(d.counts.begin(), d.counts.end(), [](auto c) { return c > 0; }) == 1);
  CHECK(d.counts[10] == 7);
  CHECK(*d.mean_position == 0.5);
  const auto empty = position_density(std::vector<double>{}, 4);
  CHECK_FALSE(empty.mean_position.has_value());
  CHECK(empty.density == std::vector<double>(4, 0.0));
}

// ---------------------------------------------------------------------------
// Novel-level analyses

TEST_CASE("act proportions per novel") {
  const std::vector<corpus::Novel> novels{novel("a", {corpus::Gender::female}), novel("b", {corpus::Gender::male}),
                                          novel("c", {corpus::Gender::male})};
  std::vector<ActAnnotation> records{act("a", 0, true, Affect::group, Impact::loving), act("a", 1, false),
                                     act("b", 0, false), act("b", 1, false), act("b", 2, true, Affect::individual, Impact::neutral),
                                     act("b", 3, false)};
  records[3].stage1.reset();
  records[3].unresolved = annotate::Unresolved{"stage1", annotate::ErrorKind::transport, "down"};
  log::set_quiet(true);
  const auto p = act_proportions(records, novels);
  log::set_quiet(false);
  CHECK(p.share.novel_ids == std::vector<std::string>{"a", "b"});
  CHECK(p.share.values == std::vector<double>{0.5, 0.25});
  CHECK(p.yes == 2);
  CHECK(p.passages == 6);
  CHECK(p.unresolved == 1);
  CHECK(p.corpus_share == doctest::Approx(2.0 / 6.0));
  CHECK(p.mean_share == doctest::Approx(0.375));
  CHECK(p.min_share == 0.25);
  records.push_back(act("zzz", 0, false));
  CHECK_THROWS_AS(act_proportions(records, novels), StatsError);
}

TEST_CASE("characterization shares") {
  const std::vector<corpus::Novel> novels{novel("a", {corpus::Gender::female}), novel("b", {corpus::Gender::male})};
  std::vector<ActAnnotation> records{act("a", 0, true, Affect::individual, Impact::loving),
                                     act("a", 1, true, Affect::individual, Impact::punishing),
                                     act("a", 2, true, Affect::group, Impact::loving), act("a", 3, false),
                                     act("b", 0, true)};
  records[4].unresolved = annotate::Unresolved{"affect", annotate::ErrorKind::malformed, "bad"};
  log::set_quiet(true);
  const auto c = characterization_shares(records, novels);
  log::set_quiet(false);
  CHECK(c.individual.values == std::vector<double>{2.0 / 3.0});
  CHECK(c.loving.values == std::vector<double>{2.0 / 3.0});
  CHECK(c.excluded == std::vector<std::string>{"b"});
  CHECK(c.acts == 3);
  CHECK(c.uncharacterized == 1);
  CHECK(c.impact_by_affect.at(Affect::individual).at(Impact::punishing) == 1);
}

TEST_CASE("characterization shares sum to one per novel") {
  std::mt19937 rng(31);
  std::vector<corpus::Novel> novels;
  for (int i = 0; i < 12; ++i) novels.push_back(novel("n" + std::to_string(i), {corpus::Gender::female}));
  std::vector<ActAnnotation> records;
  for (int i = 0; i < 400; ++i) {
    const bool yes = rng() % 2;
    records.push_back(act("n" + std::to_string(rng() % 12), static_cast<std::size_t>(i), yes,
                          yes ? std::optional<Affect>(static_cast<Affect>(rng() % 2)) : std::nullopt,
                          yes ? std::optional<Impact>(static_cast<Impact>(rng() % 4)) : std::nullopt));
  }
  const auto c = characterization_shares(records, novels);
  for (std::size_t i = 0; i < c.individual.size(); ++i) {
    CHECK(c.individual.values[i] + c.group.values[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.loving.values[i] + c.punishing.values[i] + c.both.values[i] + c.neutral.values[i] ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("group_compare selects the same novels as a brute-force filter") {
  using corpus::Gender;
  std::mt19937 rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<corpus::Novel> novels;
    NovelSeries series;
    series.name = "x";
    const std::size_t n = 2 + rng() % 20;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Gender> g;
      for (std::size_t k = 0, m = 1 + rng() % 2; k < m; ++k) g.push_back(static_cast<Gender>(rng() % 3));
      novels.push_back(novel("n" + std::to_string(i), g, rng() % 3 == 0 ? std::optional<std::string>("lb") : std::nullopt));
      if (rng() % 6 != 0) {  // some novels have no value
        series.novel_ids.push_back(novels.back().id);
        series.values.push_back(static_cast<double>(rng() % 100) / 10.0);
      }
    }
    const auto grouping = rng() % 2 ? Grouping::gender : Grouping::series;
    GroupFilters filters;
    if (rng() % 2) filters.exclude_series = "lb";
    filters.exclude_mixed_gender = rng() % 2;

    std::vector<std::string> a, b;
    std::vector<double> va, vb;
    for (const auto& nv : novels) {
      const auto v = series.value_of(nv.id);
      if (!v) continue;
      const auto gg = corpus::gender_group(nv);
      if (filters.exclude_series && nv.in_series("lb")) continue;
      if ((filters.exclude_mixed_gender || grouping == Grouping::gender) && gg == corpus::GenderGroup::mixed) continue;
      const bool in_a = grouping == Grouping::gender ? gg == corpus::GenderGroup::female : nv.in_series("lb");
      (in_a ? a : b).push_back(nv.id);
      (in_a ? va : vb).push_back(*v);
    }

    if (a.size() < 2 || b.size() < 2) {
      CHECK_THROWS_AS(group_compare(series, novels, grouping, filters, "lb"), StatsError);
      continue;
    }
    try {
      const auto r = group_compare(series, novels, grouping, filters, "lb");
      CHECK(r.ids_a == a);
      CHECK(r.ids_b == b);
      const auto expected = ttest_ind(va, vb);
      CHECK(r.result.statistic == expected.statistic);
      CHECK(r.result.p_two_sided == expected.p_two_sided);
    } catch (const StatsError& e) {
      FAIL(e.what());
    }
  }
}

TEST_CASE("group_compare names the filters when a group is empty") {
  using corpus::Gender;
  const std::vector<corpus::Novel> novels{novel("a", {Gender::male}), novel("b", {Gender::male}),
                                          novel("c", {Gender::female}, "lb")};
  NovelSeries s{"act_share", {"a", "b", "c"}, {0.1, 0.2, 0.3}};
  GroupFilters f;
  f.exclude_series = "lb";
  CHECK_THROWS_WITH_AS(group_compare(s, novels, Grouping::gender, f, "lb"), doctest::Contains("empty"), StatsError);
}

TEST_CASE("analysis config parsing") {
  const auto c = parse_analysis_config(nlohmann::json::parse(R"({
    "series_tag": "lb", "position_bins": 10,
    "topic_groups": {"church": [1, 2]},
    "comparisons": [{"name": "g", "measure": "topic:church", "grouping": "gender", "exclude_series": true}],
    "correlations": [{"name": "c", "x": "act_share", "y": "topic:church"}]})"));
  CHECK(c.series_tag == "lb");
  CHECK(c.position_bins == 10);
  CHECK(c.topic_groups.at("church") == std::vector<std::size_t>{1, 2});
  CHECK(c.comparisons.at(0).exclude_series);
  CHECK_THROWS_AS(parse_analysis_config(nlohmann::json::parse(R"({"position_bin": 10})")), ConfigError);
  CHECK_THROWS_AS(parse_analysis_config(nlohmann::json::parse(
                      R"({"comparisons": [{"name": "g", "measure": "bogus", "grouping": "gender"}]})")),
                  ConfigError);
}
