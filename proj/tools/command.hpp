#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "forumtag/error.hpp"

namespace forumtag::cli {

// "--context-cap" -> "context_cap"
inline std::string key_of(const std::string& flag) {
  std::string key = flag.substr(flag.find_first_not_of('-'));
  for (char& c : key) {
    if (c == '-') c = '_';
  }
  return key;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_object()) throw ValidationError("config file " + path + " must hold a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }
}

// A subcommand whose settings resolve as flags > config file > defaults.
// Plain options fill their variable from the file when the flag is absent;
// tunables are collected into a JSON object of explicit flag values so the
// caller can layer them over a file-derived config.
class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& description)
      : sub_(app.add_subcommand(name, description)) {
    option("--seed", seed, "Random seed");
    sub_->add_option("--config", config_path_, "JSON config file; flags take precedence")
        ->check(CLI::ExistingFile);
    flag("--json", json, "Machine-readable output");
  }

  CLI::App* app() const { return sub_; }
  bool chosen() const { return sub_->parsed(); }

  template <typename T>
  CLI::Option* option(const std::string& flag, T& value, const std::string& description) {
    CLI::Option* opt = sub_->add_option(flag, value, description);
    bind(opt, key_of(flag), value);
    return opt;
  }

  CLI::Option* flag(const std::string& flag, bool& value, const std::string& description) {
    CLI::Option* opt = sub_->add_flag(flag, value, description);
    bind(opt, key_of(flag), value);
    return opt;
  }

  template <typename T>
  CLI::Option* tunable(const std::string& flag, const std::string& description) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = sub_->add_option(flag, *holder, description);
    const std::string key = key_of(flag);
    tunables_.push_back([opt, key, holder](nlohmann::json& out) {
      if (opt->count() > 0) out[key] = *holder;
    });
    return opt;
  }

  CLI::Option* tunable_flag(const std::string& flag, const std::string& description) {
    auto holder = std::make_shared<bool>(false);
    CLI::Option* opt = sub_->add_flag(flag, *holder, description);
    const std::string key = key_of(flag);
    tunables_.push_back([opt, key, holder](nlohmann::json& out) {
      if (opt->count() > 0) out[key] = *holder;
    });
    return opt;
  }

  // Applies the config file and returns its keys not claimed by a plain
  // option. With `allow_rest` false any such key is an error.
  nlohmann::json resolve(bool allow_rest = false) {
    nlohmann::json file = config_path_.empty() ? nlohmann::json::object() : read_json_file(config_path_);
    nlohmann::json rest = nlohmann::json::object();
    for (auto it = file.begin(); it != file.end(); ++it) {
      if (!claimed_.count(it.key())) rest[it.key()] = it.value();
    }
    for (const auto& apply : resolvers_) apply(file);
    if (!allow_rest && !rest.empty()) {
      throw ValidationError("config file: unknown key '" + rest.begin().key() + "' for " + sub_->get_name());
    }
    return rest;
  }

  nlohmann::json overrides() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& f : tunables_) f(out);
    return out;
  }

  std::uint64_t seed = 1;
  bool json = false;

 private:
  template <typename T>
  void bind(CLI::Option* opt, const std::string& key, T& value) {
    claimed_.insert(key);
    resolvers_.push_back([opt, key, &value](const nlohmann::json& file) {
      if (opt->count() > 0 || !file.contains(key)) return;
      try {
        value = file.at(key).get<T>();
      } catch (const nlohmann::json::exception&) {
        throw ValidationError("config file: key '" + key + "' has the wrong type");
      }
    });
  }

  CLI::App* sub_;
  std::string config_path_;
  std::set<std::string> claimed_;
  std::vector<std::function<void(const nlohmann::json&)>> resolvers_;
  std::vector<std::function<void(nlohmann::json&)>> tunables_;
};

}  // namespace forumtag::cli
