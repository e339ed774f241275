#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "godspell/eval.hpp"
#include "godspell/log.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace godspell;
using namespace godspell::eval;

namespace {

ReliabilityData data_from(const std::vector<std::vector<int>>& units) {  // -1 = missing; 0 yes, 1 maybe, 2 no
  ReliabilityData d;
  const std::size_t coders = units.empty() ? 0 : units[0].size();
  for (std::size_t c = 0; c < coders; ++c) d.annotators.push_back("a" + std::to_string(c));
  for (std::size_t u = 0; u < units.size(); ++u) {
    d.items.push_back("p:" + std::to_string(u));
    std::vector<std::optional<Label>> row;
    for (int v : units[u]) row.push_back(v < 0 ? std::nullopt : std::optional<Label>(static_cast<Label>(v)));
    d.labels.push_back(row);
  }
  return d;
}

std::vector<std::vector<int>> random_units(std::mt19937& rng, std::size_t n, std::size_t coders, int values,
                                           bool missing) {
  std::vector<std::vector<int>> units(n, std::vector<int>(coders));
  for (auto& u : units) {
    for (auto& v : u) v = (missing && rng() % 5 == 0) ? -1 : static_cast<int>(rng() % values);
  }
  return units;
}

ResolvedLabels labels_with(std::size_t yes, std::size_t maybe, std::size_t no) {
  ResolvedLabels r;
  for (std::size_t i = 0; i < yes; ++i) r["y:" + std::to_string(i)] = {Label::yes, false, ""};
  for (std::size_t i = 0; i < maybe; ++i) r["m:" + std::to_string(i)] = {Label::maybe, false, ""};
  for (std::size_t i = 0; i < no; ++i) r["n:" + std::to_string(i)] = {Label::no, false, ""};
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Agreement

TEST_CASE("krippendorff alpha on small examples") {
  CHECK(krippendorff_alpha(data_from({{0, 0}, {2, 2}, {1, 1}, {0, 0}})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(krippendorff_alpha(data_from({{0, 0}, {2, 2}, {0, 2}, {2, 2}})) ==
        doctest::Approx(8.0 / 15.0).epsilon(1e-12));
  CHECK_THROWS_AS(krippendorff_alpha(data_from({{0, -1}, {-1, 2}})), EvalError);
  CHECK_THROWS_AS(krippendorff_alpha(data_from({{0, 0}, {0, 0}})), EvalError);
}

TEST_CASE("krippendorff alpha matches the pairwise-disagreement oracle") {
  std::mt19937 rng(7);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto units = random_units(rng, 2 + rng() % 30, 2 + rng() % 4, 2 + static_cast<int>(rng() % 2), true);
    double expected;
    try {
      expected = oracle::pairwise_alpha(units);
    } catch (...) {
      continue;
    }
    double got;
    try {
      got = krippendorff_alpha(data_from(units));
    } catch (const EvalError&) {
      continue;  // degenerate draws: nothing pairable or a single value
    }
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    ++compared;
  }
  CHECK(compared > 250);
}

TEST_CASE("krippendorff alpha is invariant to item and annotator order") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    auto units = random_units(rng, 3 + rng() % 20, 2 + rng() % 3, 3, trial % 2 == 0);
    double base;
    try {
      base = krippendorff_alpha(data_from(units));
    } catch (const EvalError&) {
      continue;
    }
    CHECK(base <= 1.0);
    CHECK(base >= -1.0);
    std::shuffle(units.begin(), units.end(), rng);
    std::vector<std::size_t> perm(units[0].size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (auto& u : units) {
      auto copy = u;
      for (std::size_t c = 0; c < perm.size(); ++c) u[c] = copy[perm[c]];
    }
    CHECK(krippendorff_alpha(data_from(units)) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("read_reliability builds the item x annotator table") {
  support::TempDir dir;
  support::write_file(dir.path() / "r.csv",
                      "passage_id,annotator_id,label\nb:1,ann1,yes\nb:1,ann2,Maybe\na:0,ann2,NO\na:0,ann2,no\n");
  const auto d = read_reliability(dir.path() / "r.csv");
  CHECK(d.items == std::vector<std::string>{"b:1", "a:0"});
  CHECK(d.annotators == std::vector<std::string>{"ann1", "ann2"});
  CHECK(d.labels[0][1] == Label::maybe);
  CHECK_FALSE(d.labels[1][0].has_value());
  CHECK(d.item_index("a:0") == 1);
  CHECK(d.item_index("zz") == std::string::npos);

  support::write_file(dir.path() / "dup.csv", "passage_id,annotator_id,label\nx,a,YES\nx,a,NO\n");
  CHECK_THROWS_WITH_AS(read_reliability(dir.path() / "dup.csv"), doctest::Contains("line 3"), ConfigError);
  support::write_file(dir.path() / "bad.csv", "passage_id,annotator_id,label\nx,a,PERHAPS\n");
  CHECK_THROWS_AS(read_reliability(dir.path() / "bad.csv"), Error);
}

TEST_CASE("labels parse case-insensitively and MAYBE converts to YES") {
  CHECK(parse_label(" maybe ") == Label::maybe);
  CHECK_THROWS_AS(parse_label("Y"), EvalError);
  CHECK(convert_maybe(Label::maybe) == Binary::yes);
  CHECK(convert_maybe(Label::no) == Binary::no);
  CHECK(convert_maybe(std::vector<Label>{Label::yes, Label::maybe, Label::no}) ==
        std::vector<Binary>{Binary::yes, Binary::yes, Binary::no});
}

// ---------------------------------------------------------------------------
// Gold

TEST_CASE("resolve_labels takes unanimous labels and applies overrides") {
  const auto data = data_from({{0, 0}, {1, 2}, {2, -1}, {0, 2}});
  std::map<std::string, Override> overrides{{"p:1", {Label::maybe, "figurative"}}, {"p:0", {Label::no, "re-read"}}};
  CHECK_THROWS_WITH_AS(resolve_labels(data, overrides), doctest::Contains("p:3"), EvalError);

  overrides["p:3"] = {Label::yes, "agreed"};
  const auto r = resolve_labels(data, overrides);
  CHECK(r.at("p:0").label == Label::no);
  CHECK(r.at("p:0").resolved_by_discussion);
  CHECK(r.at("p:2").label == Label::no);
  CHECK_FALSE(r.at("p:2").resolved_by_discussion);
  const auto gold = to_gold(r);
  CHECK(gold.at("p:1").label == Binary::yes);
  CHECK(gold.at("p:1").note == "figurative");
}

TEST_CASE("stratified sample draws per class without replacement") {
  log::set_quiet(true);
  std::mt19937 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t y = rng() % 80, m = rng() % 80, n = rng() % 80, k = 1 + rng() % 60;
    const auto labels = labels_with(y, m, n);
    const auto seed = rng();
    const auto s = stratified_sample(labels, k, seed);
    CHECK(s == stratified_sample(labels, k, seed));
    const std::set<std::string> unique(s.begin(), s.end());
    CHECK(unique.size() == s.size());
    std::size_t cy = 0, cm = 0, cn = 0;
    for (const auto& id : s) {
      REQUIRE(labels.contains(id));
      cy += id[0] == 'y';
      cm += id[0] == 'm';
      cn += id[0] == 'n';
    }
    CHECK(cy == std::min(y, k));
    CHECK(cm == std::min(m, k));
    CHECK(cn == std::min(n, k));
  }
  CHECK_THROWS_AS(stratified_sample(labels_with(5, 0, 5), 3, 1, true), EvalError);
  log::set_quiet(false);
}

TEST_CASE("stratified sample is roughly uniform within a class") {
  const auto labels = labels_with(10, 0, 0);
  std::map<std::string, int> hits;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    for (const auto& id : stratified_sample(labels, 5, seed)) ++hits[id];
  }
  for (const auto& [id, h] : hits) CHECK(std::abs(h - 2000) < 200);
}

TEST_CASE("overrides file") {
  support::TempDir dir;
  support::write_file(dir.path() / "o.csv", "passage_id,label,resolution_note\nx:1,maybe,\"metaphor, discussed\"\n");
  const auto o = read_overrides(dir.path() / "o.csv");
  CHECK(o.at("x:1").label == Label::maybe);
  CHECK(o.at("x:1").note == "metaphor, discussed");
}

// ---------------------------------------------------------------------------
// Scoring

TEST_CASE("confusion on a small example") {
  const std::map<std::string, Binary> gold{{"a", Binary::yes}, {"b", Binary::no}, {"c", Binary::yes}, {"d", Binary::no}};
  const std::map<std::string, Binary> pred{{"a", Binary::yes}, {"b", Binary::yes}, {"c", Binary::no}, {"d", Binary::no}};
  const auto c = confusion(gold, pred);
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.tn == 1);
  auto missing = pred;
  missing.erase("d");
  missing["e"] = Binary::no;
  CHECK_THROWS_WITH_AS(confusion(gold, missing), doctest::Contains("only in gold: d"), EvalError);
}

TEST_CASE("f1 is the harmonic mean") {
  CHECK(f1_score(0.52, 0.84) == doctest::Approx(0.6424).epsilon(1e-3));
  CHECK(f1_score(0.97, 0.87) == doctest::Approx(0.9173).epsilon(1e-3));
  CHECK(f1_score(0.0, 0.0) == 0.0);
}

TEST_CASE("prf on random confusions") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    Confusion c{rng() % 50, rng() % 50, rng() % 50, rng() % 50};
    if (c.total() == 0) continue;
    const auto r = prf(c);
    CHECK(r.micro_f1 == doctest::Approx(static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total())));
    for (const auto* m : {&r.yes, &r.no}) {
      CHECK(m->precision >= 0.0);
      CHECK(m->precision <= 1.0);
      CHECK(m->f1 <= std::max(m->precision, m->recall) + 1e-12);
      CHECK(m->f1 >= std::min(m->precision, m->recall) - 1e-12);
    }
    if (c.tp + c.fp > 0) CHECK(r.yes.precision == doctest::Approx(double(c.tp) / double(c.tp + c.fp)));
    if (c.tn + c.fn > 0) CHECK(r.no.precision == doctest::Approx(double(c.tn) / double(c.tn + c.fn)));
  }
}

TEST_CASE("perfect predictions score one everywhere") {
  std::mt19937 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    std::map<std::string, Binary> g;
    const std::size_t n = 2 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) g["p" + std::to_string(i)] = i % 2 || rng() % 2 ? Binary::yes : Binary::no;
    g["first"] = Binary::no;
    g["second"] = Binary::yes;
    const auto r = prf(confusion(g, g));
    CHECK(r.yes.precision == 1.0);
    CHECK(r.yes.recall == 1.0);
    CHECK(r.no.f1 == 1.0);
    CHECK(r.micro_f1 == 1.0);
  }
}

TEST_CASE("zero denominators are flagged") {
  const auto r = prf(Confusion{0, 0, 3, 5});
  CHECK(r.yes.zero_division);
  CHECK(r.yes.precision == 0.0);
  CHECK_FALSE(r.no.zero_division);
}

TEST_CASE("predicted labels count unresolved detections as NO") {
  using namespace godspell::annotate;
  std::vector<ActAnnotation> records(3);
  records[0].passage = "a:0";
  records[0].final_label = Verdict::yes;
  records[1].passage = "a:1";
  records[1].unresolved = Unresolved{"stage1", ErrorKind::transport, "down"};
  records[2].passage = "a:2";
  records[2].final_label = Verdict::yes;
  records[2].unresolved = Unresolved{"impact", ErrorKind::malformed, "bad"};
  std::size_t unresolved = 0;
  const auto p = predicted_labels(records, &unresolved);
  CHECK(unresolved == 1);
  CHECK(p.at("a:0") == Binary::yes);
  CHECK(p.at("a:1") == Binary::no);
  CHECK(p.at("a:2") == Binary::yes);
}

TEST_CASE("spot-check agreement") {
  std::map<std::string, std::string> human, model;
  for (int i = 0; i < 100; ++i) {
    human[std::to_string(i)] = "GROUP";
    model[std::to_string(i)] = i < 81 ? "GROUP" : "INDIVIDUAL";
  }
  model["extra"] = "GROUP";
  const auto a = spotcheck_agreement(human, model);
  CHECK(a.matches == 81);
  CHECK(a.total == 100);
  CHECK(a.percent == doctest::Approx(81.0));
}
