#include "run_output.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "phonon/digest.hpp"
#include "phonon/errors.hpp"

namespace phononsim {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunOutput::RunOutput(std::filesystem::path dir, std::string command) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw phonon::ValidationError("cannot create output directory " + dir_.string() + ": " + ec.message());
  manifest_["command"] = std::move(command);
  manifest_["started"] = utc_timestamp();
}

void RunOutput::write(const std::string& name, const std::string& kind, const std::string& content) {
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed to write " + path.string());
  artifacts_.push_back({{"path", name}, {"kind", kind}, {"bytes", content.size()}, {"sha256", phonon::sha256_hex(content)}});
}

void RunOutput::write_json(const std::string& name, const std::string& kind, const nlohmann::ordered_json& value) {
  write(name, kind, value.dump(2) + "\n");
}

void RunOutput::add_assumption(std::string text) { assumptions_.push_back(std::move(text)); }
void RunOutput::add_warning(std::string text) { warnings_.push_back(std::move(text)); }

void RunOutput::finish(int exit_code) {
  if (finished_) return;
  finished_ = true;
  manifest_["finished"] = utc_timestamp();
  manifest_["exit_code"] = exit_code;
  manifest_["assumptions"] = assumptions_;
  manifest_["warnings"] = warnings_;
  manifest_["artifacts"] = artifacts_;
  std::ofstream out(dir_ / "manifest.json");
  out << manifest_.dump(2) << "\n";
}

}  // namespace phononsim
