#include <iostream>

#include <CLI11.hpp>

#include "eplab/cli/runner.hpp"

namespace cli = eplab::cli;

namespace {

struct Common {
  std::string experiment;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string out;
  int workers = 0;
  std::string format = "md";
};

void add_common(CLI::App* app, Common& c, bool with_format) {
  app->add_option("--experiment", c.experiment, "experiment id");
  app->add_option("--config", c.config, "config file (INI)");
  app->add_option("--seed", c.seed, "base seed");
  app->add_option("--episodes", c.episodes, "episode count (training for train, evaluation otherwise)");
  app->add_option("--out", c.out, "output root (default $EP_LAB_OUT or ./results)");
  app->add_option("--workers", c.workers, "worker threads (0 = all processors)");
  if (with_format) app->add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"csv", "md"}));
}

cli::ExperimentConfig load(const Common& c, bool training) {
  if (c.config.empty() && c.experiment.empty()) throw cli::UsageError("need --experiment or --config");
  auto cfg = c.config.empty() ? cli::parse_config("", c.experiment) : cli::load_config(c.config, c.experiment);
  if (!c.experiment.empty() && cfg.id != c.experiment) {
    throw cli::UsageError("--experiment " + c.experiment + " contradicts config id " + cfg.id);
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.episodes) (training ? cfg.train_episodes : cfg.eval_episodes) = *c.episodes;
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw cli::UsageError(e.what());
  }
  return cfg;
}

std::string out_root(const Common& c, const cli::ExperimentConfig& cfg) {
  if (!c.out.empty()) return c.out;
  if (!cfg.out.empty()) return cfg.out;
  return cli::default_out_dir();
}

int finish(cli::Invocation& inv, const std::string& root, bool write_manifest = true) {
  const auto dir = cli::fs::path(root) / (inv.command == "report" ? std::string("report") : inv.config.id);
  const auto out = cli::execute(inv);
  std::cout << out.stdout_text;
  if (write_manifest) {
    const auto m = cli::write_outcome(dir, inv, out);
    std::cerr << "wrote " << out.artifacts.size() << " file(s) and " << m << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eplab: experiments on decision timing"};
  app.set_version_flag("--version", std::string(cli::kVersion));
  app.require_subcommand(1);

  Common train_o, eval_o, cross_o, trace_o, render_o;
  std::vector<std::string> eval_tables, cross_tables, trace_tables, render_tables;

  auto* train = app.add_subcommand("train", "train the learned policies of an experiment");
  add_common(train, train_o, false);

  auto* ev = app.add_subcommand("eval", "evaluate every method of an experiment");
  add_common(ev, eval_o, true);
  ev->add_option("--table", eval_tables, "SETTING=FILE table to use instead of training");

  auto* cross = app.add_subcommand("cross-eval", "evaluate trained tables across settings");
  add_common(cross, cross_o, true);
  cross->add_option("--table", cross_tables, "SETTING=FILE table to use instead of training");

  std::string trace_method;
  int trace_episode = 0;
  auto* trace = app.add_subcommand("trace", "record one evaluation episode as JSONL");
  add_common(trace, trace_o, false);
  trace->add_option("--method", trace_method, "method (default: first listed)");
  trace->add_option("--episode", trace_episode, "evaluation episode index")->check(CLI::NonNegativeNumber);
  trace->add_option("--table", trace_tables, "SETTING=FILE table to use instead of training");

  std::string render_trace, render_criterion, render_style = "ascii", render_method;
  int render_start = 0, render_panels = 5, render_episode = 0;
  auto* render = app.add_subcommand("render", "render consecutive ticks of a patrol trace");
  add_common(render, render_o, false);
  render->add_option("--trace", render_trace, "trace file (JSONL); default records one");
  render->add_option("--criterion", render_criterion, "first_interruption | first_alarm_during_handling");
  render->add_option("--start", render_start, "first tick")->check(CLI::NonNegativeNumber);
  render->add_option("--panels", render_panels, "number of panels")->check(CLI::PositiveNumber);
  render->add_option("--style", render_style, "ascii | svg")->check(CLI::IsMember({"ascii", "svg"}));
  render->add_option("--method", render_method, "method when recording a trace");
  render->add_option("--episode", render_episode, "episode when recording a trace")->check(CLI::NonNegativeNumber);
  render->add_option("--table", render_tables, "SETTING=FILE table to use instead of training");

  std::string report_out;
  auto* report = app.add_subcommand("report", "collect metrics CSVs into one Markdown file per table");
  report->add_option("--out", report_out, "output root (default $EP_LAB_OUT or ./results)");

  std::string manifest_path, replay_out;
  int replay_workers = 0;
  auto* rep = app.add_subcommand("replay", "rerun a manifest and compare outputs byte for byte");
  rep->add_option("manifest", manifest_path, "manifest JSON")->required();
  rep->add_option("--out", replay_out, "also write the regenerated files here");
  rep->add_option("--workers", replay_workers, "worker threads (0 = all processors)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto put_tables = [](cli::Invocation& inv, const std::vector<std::string>& specs) {
    for (const auto& t : specs) {
      const auto eq = t.find('=');
      if (eq == std::string::npos || eq == 0) throw cli::UsageError("--table expects SETTING=FILE, got '" + t + "'");
      inv.options["table." + t.substr(0, eq)] = t.substr(eq + 1);
    }
  };

  try {
    auto run = [&](const std::string& command, const Common& o, const std::vector<std::string>& tables,
                   bool training) {
      cli::Invocation inv;
      inv.command = command;
      inv.config = load(o, training);
      inv.workers = o.workers;
      if (command == "eval" || command == "cross-eval") inv.options["format"] = o.format;
      put_tables(inv, tables);
      const std::string root = out_root(o, inv.config);
      if (command != "train") cli::adopt_saved_tables(inv, cli::fs::path(root) / inv.config.id);
      return inv;
    };
    if (*train) {
      auto inv = run("train", train_o, {}, true);
      return finish(inv, out_root(train_o, inv.config));
    }
    if (*ev) {
      auto inv = run("eval", eval_o, eval_tables, false);
      return finish(inv, out_root(eval_o, inv.config));
    }
    if (*cross) {
      auto inv = run("cross-eval", cross_o, cross_tables, false);
      return finish(inv, out_root(cross_o, inv.config));
    }
    if (*trace) {
      auto inv = run("trace", trace_o, trace_tables, false);
      if (!trace_method.empty()) inv.options["method"] = trace_method;
      inv.options["episode"] = std::to_string(trace_episode);
      return finish(inv, out_root(trace_o, inv.config));
    }
    if (*render) {
      Common o = render_o;
      if (o.experiment.empty() && o.config.empty()) o.experiment = "patrol-module";
      auto inv = run("render", o, render_tables, false);
      if (!render_trace.empty()) inv.options["trace"] = render_trace;
      if (!render_criterion.empty()) inv.options["criterion"] = render_criterion;
      if (!render_method.empty()) inv.options["method"] = render_method;
      inv.options["episode"] = std::to_string(render_episode);
      inv.options["start"] = std::to_string(render_start);
      inv.options["panels"] = std::to_string(render_panels);
      inv.options["style"] = render_style;
      return finish(inv, out_root(o, inv.config));
    }
    if (*report) {
      cli::Invocation inv;
      inv.command = "report";
      inv.config = cli::ExperimentConfig::defaults("deliberation-single");
      const std::string root = report_out.empty() ? cli::default_out_dir() : report_out;
      inv.options["root"] = root;
      return finish(inv, root);
    }
    if (*rep) {
      nlohmann::json m;
      try {
        m = nlohmann::json::parse(cli::read_file(manifest_path));
      } catch (const nlohmann::json::exception& e) {
        throw cli::UsageError(manifest_path + ": " + e.what());
      }
      const auto r = cli::replay(m, replay_workers);
      for (const auto& l : r.lines) {
        std::cout << (l.ok() ? "identical " : "DIFFERS   ") << l.file << "  " << l.expected << ' ' << l.actual << '\n';
      }
      if (!replay_out.empty()) {
        for (const auto& a : r.outcome.artifacts) cli::write_file(cli::fs::path(replay_out) / a.name, a.content);
      }
      std::cout << (r.ok() ? "replay: all outputs reproduced\n" : "replay: outputs differ\n");
      return r.ok() ? 0 : 2;
    }
  } catch (const cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const cli::NoMatch& e) {
    std::cerr << "warning: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
