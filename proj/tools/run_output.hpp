#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace phononsim {

// Output directory of one invocation. Every file goes through write(), so the manifest lists all of them.
class RunOutput {
public:
  RunOutput(std::filesystem::path dir, std::string command);

  const std::filesystem::path& dir() const { return dir_; }
  void write(const std::string& name, const std::string& kind, const std::string& content);
  void write_json(const std::string& name, const std::string& kind, const nlohmann::ordered_json& value);

  nlohmann::ordered_json& manifest() { return manifest_; }
  void add_assumption(std::string text);
  void add_warning(std::string text);
  // Writes manifest.json; call once at the end, with the exit code about to be returned.
  void finish(int exit_code);

private:
  std::filesystem::path dir_;
  nlohmann::ordered_json manifest_;
  nlohmann::ordered_json artifacts_ = nlohmann::ordered_json::array();
  std::vector<std::string> assumptions_, warnings_;
  bool finished_ = false;
};

std::string utc_timestamp();

}  // namespace phononsim
