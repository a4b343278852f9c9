#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jsvb/pipeline.hpp"

using jsvb::pipeline::Config;
using jsvb::pipeline::StageSummary;

namespace {

struct CliOptions {
  std::string config_path;
  Config config;
  std::string mode;
  std::string matching;
  bool has_seed = false;
  uint64_t seed = 1;
};

void add_common_options(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file; flags override it");
  cmd->add_option("--records", opts.config.records_path, "advisory records (JSONL)");
  cmd->add_option("--fixtures", opts.config.fixtures_root, "captured repository trees");
  cmd->add_option("--dataset", opts.config.dataset_root, "dataset output root");
  cmd->add_option("--data-dir", opts.config.data_dir,
                  "catalog, prompt library, CWE table, system prompt");
  cmd->add_option("--variant", opts.config.variants,
                  "variant(s) to process; default all five");
  cmd->add_option("--split", opts.config.split, "full or dn")
      ->check(CLI::IsMember({"full", "dn"}));
  cmd->add_option("--mode", opts.mode, "payload granularity")
      ->check(CLI::IsMember({"project", "snippet"}));
  cmd->add_option("--matching", opts.matching, "CWE matching")
      ->check(CLI::IsMember({"equiv", "equivalence", "strict"}));
  cmd->add_option("--seed", opts.seed, "global augmentation seed");
  cmd->add_option("--vds-r", opts.config.vds_r, "VD-S false positive budget");
  cmd->add_option("--workers", opts.config.workers, "parallel detection requests");
  cmd->add_option("--replay", opts.config.replay_path, "transcript for offline detection");
  cmd->add_option("--model", opts.config.models, "model id(s) to run");
  cmd->add_option("--temperature", opts.config.temperature, "sampling temperature");
  cmd->add_option("--timeout", opts.config.timeout_s, "per-request timeout (seconds)");
  cmd->add_option("--threshold", opts.config.confidence_threshold,
                  "finding confidence cutoff");
  cmd->add_option("--budget", opts.config.input_token_budget, "prompt token budget");
  cmd->add_option("--endpoint-host", opts.config.endpoint_host, "live HTTP endpoint host");
  cmd->add_option("--endpoint-port", opts.config.endpoint_port, "live HTTP endpoint port");
  cmd->add_option("--endpoint-route", opts.config.endpoint_route, "live HTTP endpoint route");
}

// Flags the user typed beat the config file; everything else falls back
// to the file, then to the defaults.
jsvb::Result<Config> resolve_config(const CLI::App* cmd, const CliOptions& opts) {
  Config config = opts.config;
  if (!opts.config_path.empty()) {
    auto loaded = jsvb::pipeline::load_config(opts.config_path);
    if (!loaded.ok()) return loaded.error();
    config = loaded.value();
    auto keep = [&](const std::string& flag, auto member) {
      if (cmd->count(flag) > 0) config.*member = opts.config.*member;
    };
    keep("--records", &Config::records_path);
    keep("--fixtures", &Config::fixtures_root);
    keep("--dataset", &Config::dataset_root);
    keep("--data-dir", &Config::data_dir);
    keep("--variant", &Config::variants);
    keep("--split", &Config::split);
    keep("--vds-r", &Config::vds_r);
    keep("--workers", &Config::workers);
    keep("--replay", &Config::replay_path);
    keep("--model", &Config::models);
    keep("--temperature", &Config::temperature);
    keep("--timeout", &Config::timeout_s);
    keep("--threshold", &Config::confidence_threshold);
    keep("--budget", &Config::input_token_budget);
    keep("--endpoint-host", &Config::endpoint_host);
    keep("--endpoint-port", &Config::endpoint_port);
    keep("--endpoint-route", &Config::endpoint_route);
  }
  if (cmd->count("--mode") > 0) {
    auto mode = jsvb::harness::parse_payload_mode(opts.mode);
    if (!mode.ok()) return mode.error();
    config.mode = mode.value();
  }
  if (cmd->count("--matching") > 0) {
    auto matching = jsvb::score::parse_match_mode(opts.matching);
    if (!matching.ok()) return matching.error();
    config.matching = matching.value();
  }
  if (cmd->count("--seed") > 0) config.seed = opts.seed;
  return config;
}

int run_stage(const std::string& name, const CLI::App* cmd, const CliOptions& opts,
              jsvb::Result<StageSummary> (*stage)(const Config&)) {
  auto config = resolve_config(cmd, opts);
  if (!config.ok()) {
    std::cerr << name << ": " << config.error().to_string() << "\n";
    return 1;
  }
  auto summary = stage(config.value());
  if (!summary.ok()) {
    std::cerr << name << ": " << summary.error().to_string() << "\n";
    return 1;
  }
  std::cout << name << ": processed " << summary.value().processed << ", rejected "
            << summary.value().rejected << "\n";
  for (const auto& note : summary.value().notes) {
    std::cout << note << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Annotated vulnerable/fixed JavaScript project pairs: build, "
               "perturb, detect with LLM detectors, score"};
  app.require_subcommand(1);

  struct Stage {
    const char* name;
    const char* help;
    jsvb::Result<StageSummary> (*run)(const Config&);
  };
  const Stage stages[] = {
      {"ingest", "validate advisories, fetch patch pairs, materialize originals",
       jsvb::pipeline::run_ingest},
      {"analyze", "annotate cases with spans, labels, line ranges, project type",
       jsvb::pipeline::run_analyze},
      {"augment", "derive the adversarial variant trees", jsvb::pipeline::run_augment},
      {"detect", "run a detector over every case version", jsvb::pipeline::run_detect},
      {"score", "match findings against ground truth, compute metrics",
       jsvb::pipeline::run_score},
      {"report", "print the metric table", jsvb::pipeline::run_report},
  };

  std::vector<std::unique_ptr<CliOptions>> options;
  for (std::size_t i = 0; i < std::size(stages); ++i) {
    auto* cmd = app.add_subcommand(stages[i].name, stages[i].help);
    options.push_back(std::make_unique<CliOptions>());
    CliOptions* opts = options.back().get();
    add_common_options(cmd, *opts);
    const Stage& stage = stages[i];
    cmd->callback([cmd, opts, &stage] {
      std::exit(run_stage(stage.name, cmd, *opts, stage.run));
    });
  }

  CLI11_PARSE(app, argc, argv);
  return 0;
}
