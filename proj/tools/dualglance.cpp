// Copyright 2026 The DualGlance Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end over the C API.
//
//   dualglance <command> [--config FILE] [--<key> VALUE ...]
//
// Every configuration key is a flag; flags override the config file.

#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dualglance/dualglance.h"

namespace {

struct ConfigDeleter {
  void operator()(dg_config* c) const { dg_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<dg_config, ConfigDeleter>;

int report(dg_status s) {
  if (s != DG_OK) std::fprintf(stderr, "error: %s\n", dg_last_error());
  return dg_exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-glance social relationship recognition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dg_version());

  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::optional<std::string>> flags;
  for (size_t i = 0; i < dg_config_key_count(); ++i) flags[dg_config_key_name(i)];

  const std::map<std::string, std::string> about = {
      {"synth", "generate a synthetic dataset"},
      {"ingest", "validate an annotation file and write dataset statistics"},
      {"train", "train a model (first glance, then second glance)"},
      {"eval", "score a checkpoint on the test split"},
      {"ablate", "train and evaluate every cell of a grid"},
      {"gradcheck", "run the finite-difference gradient suite"}};
  for (size_t c = 0; c < dg_command_count(); ++c) {
    const std::string name = dg_command_name(c);
    CLI::App* sub = app.add_subcommand(name, about.count(name) ? about.at(name) : "");
    sub->add_option("-c,--config", config_file, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "extra key=value assignments, applied last");
    for (size_t i = 0; i < dg_config_key_count(); ++i) {
      const std::string name = dg_config_key_name(i);
      sub->add_option("--" + name, flags[name], dg_config_key_help(i))->group(dg_config_key_section(i));
    }
  }
  app.add_subcommand("keys", "list configuration keys and defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  dg_config* raw = nullptr;
  if (dg_status s = dg_config_create(&raw); s != DG_OK) return report(s);
  ConfigPtr config(raw);

  const CLI::App* sub = app.get_subcommands().front();
  if (sub->get_name() == "keys") {
    std::vector<char> buf(4096);
    for (size_t i = 0; i < dg_config_key_count(); ++i) {
      size_t need = 0;
      dg_config_get(config.get(), dg_config_key_name(i), buf.data(), buf.size(), &need);
      std::printf("%-24s %-6s %-24s %s\n", dg_config_key_name(i), dg_config_key_section(i), buf.data(),
                  dg_config_key_help(i));
    }
    return 0;
  }

  if (!config_file.empty()) {
    if (dg_status s = dg_config_load_file(config.get(), config_file.c_str()); s != DG_OK) return report(s);
  }
  for (const auto& [key, value] : flags) {
    if (!value) continue;
    if (dg_status s = dg_config_set(config.get(), key.c_str(), value->c_str()); s != DG_OK) return report(s);
  }
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return 1;
    }
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (dg_status s = dg_config_set(config.get(), key.c_str(), value.c_str()); s != DG_OK) return report(s);
  }
  return report(dg_run(config.get(), sub->get_name().c_str()));
}
