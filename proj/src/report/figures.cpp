#include <algorithm>
#include <cstdio>
#include <sstream>

#include "godspell/csv.hpp"
#include "godspell/report.hpp"

namespace godspell::report {
namespace {

using Json = nlohmann::json;

std::string num(const Json& v) { return v.is_null() ? std::string{} : v.dump(); }

std::string printf_str(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string fixed(const Json& v, int digits = 4) {
  if (v.is_null()) return "n/a";
  return printf_str(("%." + std::to_string(digits) + "f").c_str(), v.get<double>());
}

std::string pval(const Json& v) { return v.is_null() ? "n/a" : printf_str("%.3e", v.get<double>()); }

std::string count(const Json& v) { return v.is_null() ? "n/a" : std::to_string(v.get<std::int64_t>()); }

// Rows sorted by `key` descending, ties by novel id.
std::vector<Json> sorted_desc(const Json& rows, const std::string& key) {
  std::vector<Json> out(rows.begin(), rows.end());
  std::stable_sort(out.begin(), out.end(), [&](const Json& a, const Json& b) {
    const double x = a.at(key).get<double>(), y = b.at(key).get<double>();
    if (x != y) return x > y;
    return a.at("novel_id").get<std::string>() < b.at("novel_id").get<std::string>();
  });
  return out;
}

std::string share_table(const Json& rows, const std::string& key, const std::string& count_key) {
  std::string s = csv::join({"rank", "novel_id", "title", key, count_key, "gender_group", "series_highlight"}) + "\n";
  std::size_t rank = 1;
  for (const auto& r : sorted_desc(rows, key)) {
    s += csv::join({std::to_string(rank++), r.at("novel_id").get<std::string>(), r.at("title").get<std::string>(),
                    num(r.at(key)), num(r.at(count_key)), r.at("gender_group").get<std::string>(),
                    r.at("in_series").get<bool>() ? "1" : "0"}) +
         "\n";
  }
  return s;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  std::string str() const {
    std::string s = line(header_);
    s += "|";
    for (std::size_t i = 0; i < header_.size(); ++i) s += "---|";
    s += "\n";
    for (const auto& r : rows_) s += line(r);
    return s;
  }

 private:
  static std::string line(const std::vector<std::string>& cells) {
    std::string s = "|";
    for (const auto& c : cells) s += " " + c + " |";
    return s + "\n";
  }
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace

std::map<std::string, std::string> figure_data(const Json& stats) {
  std::map<std::string, std::string> out;
  out["act_share.csv"] = share_table(stats.at("acts").at("novels"), "share", "yes");

  std::string pos = "bin,lower,upper,count,density\n";
  for (const auto& b : stats.at("position").at("histogram")) {
    pos += csv::join({num(b.at("bin")), num(b.at("lower")), num(b.at("upper")), num(b.at("count")),
                      num(b.at("density"))}) +
           "\n";
  }
  out["position_density.csv"] = pos;

  const auto& ch = stats.at("characterization").at("novels");
  out["individual_share.csv"] = share_table(ch, "individual_share", "acts");
  out["loving_share.csv"] = share_table(ch, "loving_share", "acts");

  if (!stats.at("topics").is_null()) {
    std::string t = "rank,topic,label,mean_prominence,top_words\n";
    for (const auto& r : stats.at("topics").at("ranking")) {
      std::string words;
      for (const auto& w : r.at("top_words")) words += (words.empty() ? "" : " ") + w.get<std::string>();
      t += csv::join({num(r.at("rank")), num(r.at("topic")), r.at("label").get<std::string>(),
                      num(r.at("mean_prominence")), words}) +
           "\n";
    }
    out["topic_prominence.csv"] = t;
  }
  return out;
}

std::string markdown_summary(const Json& stats, const Json* metrics) {
  std::ostringstream md;
  md << "# Acts of God report\n\n";

  const auto& corpus = stats.at("corpus");
  md << "## Corpus\n\n";
  {
    Table t({"novels", "passages", "passages per novel (mean)", "min", "max", "words per passage (mean)", "min",
             "max"});
    const auto& ppn = corpus.at("passages_per_novel");
    const auto& wpp = corpus.at("words_per_passage");
    t.add({count(corpus.at("novels")), count(corpus.at("passages")), fixed(ppn.at("mean"), 2), count(ppn.at("min")),
           count(ppn.at("max")), fixed(wpp.at("mean"), 2), count(wpp.at("min")), count(wpp.at("max"))});
    md << t.str() << "\n";
  }

  if (metrics) {
    md << "## Detection metrics\n\n";
    Table rounds({"round", "items", "annotators", "alpha"});
    for (const auto& r : metrics->at("rounds")) {
      rounds.add({r.at("name").get<std::string>(), count(r.at("items")), count(r.at("annotators")),
                  fixed(r.at("alpha"))});
    }
    md << rounds.str() << "\n";
    const auto& gold = metrics->at("gold");
    md << "Gold set: " << count(gold.at("items")) << " passages, " << count(gold.at("yes")) << " YES ("
       << count(gold.at("maybe_converted")) << " from MAYBE), " << count(gold.at("no")) << " NO, "
       << count(gold.at("resolved_by_discussion")) << " resolved by discussion.\n\n";

    const auto& prf = metrics->at("prf");
    Table t({"label", "precision", "recall", "F1"});
    t.add({"YES", fixed(prf.at("yes").at("precision"), 2), fixed(prf.at("yes").at("recall"), 2),
           fixed(prf.at("yes").at("f1"), 2)});
    t.add({"NO", fixed(prf.at("no").at("precision"), 2), fixed(prf.at("no").at("recall"), 2),
           fixed(prf.at("no").at("f1"), 2)});
    t.add({"overall (micro)", "", "", fixed(prf.at("micro_f1"), 2)});
    md << t.str() << "\n";
    const auto& c = metrics->at("confusion");
    md << "Confusion: TP " << count(c.at("tp")) << ", FP " << count(c.at("fp")) << ", FN " << count(c.at("fn"))
       << ", TN " << count(c.at("tn")) << "; unresolved scored as NO: " << count(metrics->at("unresolved_scored_as_no"))
       << ".\n\n";
    if (!metrics->at("spotcheck").is_null()) {
      const auto& sc = metrics->at("spotcheck");
      Table s({"facet", "matches", "checked", "agreement (%)"});
      for (const char* f : {"affect", "impact"}) {
        s.add({f, count(sc.at(f).at("matches")), count(sc.at(f).at("total")), fixed(sc.at(f).at("percent"), 2)});
      }
      md << s.str() << "\n";
    }
  }

  const auto& acts = stats.at("acts");
  md << "## Acts of God\n\n";
  if (acts.at("yes").get<std::int64_t>() == 0) {
    md << "_no acts detected_ in " << count(acts.at("passages")) << " passages.\n\n";
  } else {
    md << count(acts.at("yes")) << " of " << count(acts.at("passages")) << " passages contain an act of God (share "
       << fixed(acts.at("share")) << "); per-novel share mean " << fixed(acts.at("per_novel").at("mean")) << ", range "
       << fixed(acts.at("per_novel").at("min")) << " to " << fixed(acts.at("per_novel").at("max"))
       << ". Unresolved passages counted as NO: " << count(acts.at("unresolved")) << ".\n\n";
    Table t({"novel", "title", "acts", "passages", "share", "series"});
    for (const auto& r : sorted_desc(acts.at("novels"), "share")) {
      t.add({r.at("novel_id").get<std::string>(), r.at("title").get<std::string>(), count(r.at("yes")),
             count(r.at("passages")), fixed(r.at("share")), r.at("in_series").get<bool>() ? "yes" : ""});
    }
    md << t.str() << "\n";

    const auto& pos = stats.at("position");
    md << "### Position in the novel\n\n";
    md << "Mean normalized position of acts: " << fixed(pos.at("mean_position")) << ".\n\n";
    Table h({"bin", "from", "to", "acts", "density"});
    for (const auto& b : pos.at("histogram")) {
      h.add({count(b.at("bin")), fixed(b.at("lower"), 2), fixed(b.at("upper"), 2), count(b.at("count")),
             fixed(b.at("density"))});
    }
    md << h.str() << "\n";

    const auto& ch = stats.at("characterization");
    md << "### Characterization\n\n";
    md << count(ch.at("acts")) << " characterized acts; " << count(ch.at("uncharacterized"))
       << " acts without a characterization.\n\n";
    Table a({"affect", "acts", "share"});
    for (const auto& [k, v] : ch.at("affect").items()) a.add({k, count(v.at("count")), fixed(v.at("share"))});
    md << a.str() << "\n";
    Table im({"impact", "acts", "share"});
    for (const auto& [k, v] : ch.at("impact").items()) im.add({k, count(v.at("count")), fixed(v.at("share"))});
    md << im.str() << "\n";
  }

  if (!stats.at("topics").is_null()) {
    const auto& tp = stats.at("topics");
    md << "## Topics\n\n";
    md << "K=" << count(tp.at("num_topics")) << ", " << count(tp.at("sweeps")) << " sweeps, seed "
       << count(tp.at("seed")) << ".\n\n";
    Table t({"rank", "topic", "label", "mean prominence (%)", "top words"});
    for (const auto& r : tp.at("ranking")) {
      std::string words;
      for (const auto& w : r.at("top_words")) words += (words.empty() ? "" : ", ") + w.get<std::string>();
      t.add({count(r.at("rank")), count(r.at("topic")), r.at("label").get<std::string>(),
             fixed(r.at("mean_prominence"), 2), words});
    }
    md << t.str() << "\n";
    if (!tp.at("groups").empty()) {
      Table g({"topic group", "mean prominence (%)"});
      for (const auto& [k, v] : tp.at("groups").items()) g.add({k, fixed(v.at("mean"), 2)});
      md << g.str() << "\n";
    }
  }

  if (!stats.at("correlations").empty()) {
    md << "## Correlations\n\n";
    Table t({"name", "x", "y", "n", "Pearson r", "p"});
    for (const auto& c : stats.at("correlations")) {
      if (c.contains("error")) {
        t.add({c.at("name").get<std::string>(), c.at("x").get<std::string>(), c.at("y").get<std::string>(), "",
               "error: " + c.at("error").get<std::string>(), ""});
        continue;
      }
      t.add({c.at("name").get<std::string>(), c.at("x").get<std::string>(), c.at("y").get<std::string>(),
             count(c.at("n")), fixed(c.at("r")), pval(c.at("p_two_sided"))});
    }
    md << t.str() << "\n";
  }

  if (!stats.at("comparisons").empty()) {
    md << "## Group comparisons\n\n";
    Table t({"name", "measure", "group A", "n", "mean", "group B", "n", "mean", "t", "df", "p"});
    for (const auto& c : stats.at("comparisons")) {
      if (c.contains("error")) {
        t.add({c.at("name").get<std::string>(), c.at("measure").get<std::string>(),
               "error: " + c.at("error").get<std::string>(), "", "", "", "", "", "", "", ""});
        continue;
      }
      const auto& a = c.at("group_a");
      const auto& b = c.at("group_b");
      const auto& test = c.at("test");
      t.add({c.at("name").get<std::string>(), c.at("measure").get<std::string>(), a.at("label").get<std::string>(),
             count(a.at("n")), fixed(a.at("mean")), b.at("label").get<std::string>(), count(b.at("n")),
             fixed(b.at("mean")), fixed(test.at("statistic")), fixed(test.at("df"), 2), pval(test.at("p_two_sided"))});
    }
    md << t.str() << "\n";
  }
  return md.str();
}

}  // namespace godspell::report
