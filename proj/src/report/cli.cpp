#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>

#include <CLI11.hpp>

#include "godspell/log.hpp"
#include "godspell/report.hpp"

namespace godspell::report {
namespace {

namespace fs = std::filesystem;

using Command = std::function<void(const RunConfig&, std::ostream&)>;

struct Subcommand {
  std::string_view name;
  std::string_view summary;
  Command run;
};

const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> list = {
      {"ingest", "read the manifest and novel texts; write corpus.json", cmd_ingest},
      {"segment", "split novels into capped passages; write passages.jsonl", cmd_segment},
      {"topics-train", "train the topic model; write topics/state.json", cmd_topics_train},
      {"topics-inspect", "list top words per topic; write topics/top_words.csv", cmd_topics_inspect},
      {"annotate", "run the act-of-God pipeline; write annotations.jsonl", cmd_annotate},
      {"eval", "agreement and detection metrics; write metrics.json", cmd_eval},
      {"stats", "novel-level analyses and tests; write stats.json", cmd_stats},
      {"report", "figure tables and summary; write figures/*.csv and report.md", cmd_report},
  };
  return list;
}

std::string usage() {
  std::string s = "usage: godspell <command> [--config FILE] [options]\n\ncommands:\n";
  for (const auto& c : subcommands()) {
    s += "  " + std::string(c.name) + std::string(16 - c.name.size(), ' ') + std::string(c.summary) + "\n";
  }
  s += "\nRun `godspell <command> --help` for options.\n";
  return s;
}

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> manifest;
  std::optional<std::size_t> segment_size;
  std::optional<std::size_t> cap;
  std::optional<std::size_t> num_topics;
  std::optional<std::size_t> sweeps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> stopwords;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<std::string> mock;
  std::optional<std::size_t> workers;
  std::optional<std::string> prompts;
  std::optional<std::string> analysis;
  bool quiet = false;
};

void add_flags(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config, "run configuration (JSON)");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--manifest", f.manifest, "corpus manifest CSV");
  app.add_option("--segment-size", f.segment_size, "words per topic-model segment");
  app.add_option("--cap", f.cap, "maximum words per annotation passage");
  app.add_option("--num-topics", f.num_topics, "number of topics K");
  app.add_option("--sweeps", f.sweeps, "Gibbs sweeps");
  app.add_option("--seed", f.seed, "random seed");
  app.add_option("--stopwords", f.stopwords, "stopword list");
  app.add_option("--endpoint", f.endpoint, "model endpoint URL");
  app.add_option("--model", f.model, "model name");
  app.add_option("--mock", f.mock, "offline model: 'builtin' or a rules file");
  app.add_option("--workers", f.workers, "concurrent model requests");
  app.add_option("--prompts", f.prompts, "prompt registry JSON");
  app.add_option("--analysis", f.analysis, "analysis config JSON");
  app.add_flag("--quiet", f.quiet, "suppress warnings");
}

RunConfig build_config(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (const char* env = std::getenv("GODSPELL_ENDPOINT"); env && *env) c.model.endpoint = env;

  if (f.out) c.output = *f.out;
  if (f.manifest) c.manifest = *f.manifest;
  if (f.segment_size) c.segment_size = *f.segment_size;
  if (f.cap) c.passage_cap = *f.cap;
  if (f.num_topics) c.topics.num_topics = *f.num_topics;
  if (f.sweeps) c.topics.sweeps = *f.sweeps;
  if (f.seed) c.topics.seed = *f.seed;
  if (f.stopwords) c.stopwords = *f.stopwords;
  if (f.endpoint) c.model.endpoint = *f.endpoint;
  if (f.model) c.model.model = *f.model;
  if (f.mock) c.mock = *f.mock;
  if (f.workers) c.workers = *f.workers;
  if (f.prompts) c.prompts = *f.prompts;
  if (f.analysis) c.analysis = *f.analysis;
  return c;
}

void write_error(const fs::path& dir, std::string_view command, int code, std::string_view kind,
                 const std::string& message) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "error.json", std::ios::binary);
  if (!out) return;
  nlohmann::ordered_json j{{"command", command}, {"exit_code", code}, {"kind", kind}, {"message", message}};
  out << j.dump(2) << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << usage();
    return kExitUsage;
  }
  if (args[0] == "-h" || args[0] == "--help" || args[0] == "help") {
    out << usage();
    return kExitOk;
  }
  const auto& list = subcommands();
  auto sub = std::find_if(list.begin(), list.end(), [&](const Subcommand& s) { return s.name == args[0]; });
  if (sub == list.end()) {
    err << "unknown command '" << args[0] << "'\n\n" << usage();
    return kExitUsage;
  }

  CLI::App app{std::string(sub->summary), "godspell " + std::string(sub->name)};
  Flags flags;
  add_flags(app, flags);
  try {
    std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "godspell " << sub->name << ": " << e.what() << "\n";
    return kExitUsage;
  }

  log::set_quiet(flags.quiet);
  std::optional<fs::path> output;
  if (flags.out) output = *flags.out;

  auto fail = [&](int code, std::string_view kind, const std::string& message) {
    err << "godspell " << sub->name << ": " << message << "\n";
    if (output) write_error(*output, sub->name, code, kind, message);
    return code;
  };

  try {
    const auto config = build_config(flags);
    output = config.output;
    check_paths(config);
    fs::create_directories(config.output);
    sub->run(config, out);
    std::error_code ec;
    fs::remove(config.output / "error.json", ec);
  } catch (const ConfigError& e) {
    return fail(kExitConfig, "config", e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, "runtime", e.what());
  }
  return kExitOk;
}

}  // namespace godspell::report
