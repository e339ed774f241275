#include "godspell/eval.hpp"

namespace godspell::eval {
namespace {

double ratio(std::size_t num, std::size_t den, bool& zero_division) {
  if (den == 0) {
    zero_division = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

LabelMetrics metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  LabelMetrics m;
  m.precision = ratio(tp, tp + fp, m.zero_division);
  m.recall = ratio(tp, tp + fn, m.zero_division);
  if (m.precision + m.recall == 0.0) {
    m.zero_division = true;
    m.f1 = 0.0;
  } else {
    m.f1 = f1_score(m.precision, m.recall);
  }
  return m;
}

nlohmann::ordered_json to_json(const LabelMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"zero_division", m.zero_division}};
}

}  // namespace

Confusion confusion(const std::map<std::string, Binary>& gold, const std::map<std::string, Binary>& predicted) {
  std::vector<std::string> only_gold, only_pred;
  for (const auto& [id, l] : gold) {
    if (!predicted.contains(id)) only_gold.push_back(id);
  }
  for (const auto& [id, l] : predicted) {
    if (!gold.contains(id)) only_pred.push_back(id);
  }
  if (!only_gold.empty() || !only_pred.empty()) {
    auto list = [](const std::vector<std::string>& ids) {
      std::string s;
      for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
      return s.empty() ? std::string("-") : s;
    };
    throw EvalError("passage sets differ; only in gold: " + list(only_gold) + "; only in predictions: " + list(only_pred));
  }

  Confusion c;
  for (const auto& [id, g] : gold) {
    const Binary p = predicted.at(id);
    if (g == Binary::yes) {
      (p == Binary::yes ? c.tp : c.fn)++;
    } else {
      (p == Binary::yes ? c.fp : c.tn)++;
    }
  }
  return c;
}

Confusion confusion(const GoldSet& gold, const std::map<std::string, Binary>& predicted) {
  std::map<std::string, Binary> labels;
  for (const auto& [id, item] : gold) labels[id] = item.label;
  return confusion(labels, predicted);
}

double f1_score(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

PrfReport prf(const Confusion& c) {
  PrfReport r;
  r.yes = metrics(c.tp, c.fp, c.fn);
  r.no = metrics(c.tn, c.fn, c.fp);
  bool unused = false;
  r.micro_f1 = ratio(c.tp + c.tn, c.total(), unused);
  return r;
}

std::map<std::string, Binary> predicted_labels(const std::vector<annotate::ActAnnotation>& records,
                                               std::size_t* unresolved) {
  std::map<std::string, Binary> out;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.detection_unresolved()) ++n;
    const bool yes = !r.detection_unresolved() && r.final_label == annotate::Verdict::yes;
    out[r.passage] = yes ? Binary::yes : Binary::no;
  }
  if (unresolved) *unresolved = n;
  return out;
}

FacetAgreement spotcheck_agreement(const std::map<std::string, std::string>& human,
                                   const std::map<std::string, std::string>& model) {
  FacetAgreement a;
  for (const auto& [id, label] : human) {
    auto it = model.find(id);
    if (it == model.end()) continue;
    ++a.total;
    if (it->second == label) ++a.matches;
  }
  a.percent = a.total ? 100.0 * static_cast<double>(a.matches) / static_cast<double>(a.total) : 0.0;
  return a;
}

nlohmann::ordered_json to_json(const Confusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}, {"total", c.total()}};
}

nlohmann::ordered_json to_json(const PrfReport& r) {
  return {{"yes", to_json(r.yes)}, {"no", to_json(r.no)}, {"micro_f1", r.micro_f1}};
}

}  // namespace godspell::eval
