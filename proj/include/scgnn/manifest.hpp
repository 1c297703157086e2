#pragma once

#include "scgnn/config.hpp"
#include "scgnn/digest.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace scgnn {

constexpr const char* kVersion = "0.1.0";

/// Every output-producing command drops a manifest.json beside its outputs:
/// the resolved configuration, the seed, and content digests of all inputs
/// and outputs, so a run can be audited and repeated.
class RunManifest {
 public:
  RunManifest(std::string command, std::vector<std::string> argv)
      : command_(std::move(command)), argv_(std::move(argv)),
        started_(now_iso()) {}

  void set_config(const Config& cfg) { config_ = cfg; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void add_input(const std::string& path) {
    if (std::filesystem::exists(path)) inputs_[path] = digest_file(path);
  }

  void add_input_dir(const std::string& dir) {
    if (!std::filesystem::is_directory(dir)) return;
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs_[f] = digest_file(f);
  }

  void add_output(const std::string& path) {
    if (std::filesystem::exists(path)) outputs_[path] = digest_file(path);
  }

  void add_output_dir(const std::string& dir, const std::string& skip = "manifest.json") {
    if (!std::filesystem::is_directory(dir)) return;
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != skip)
        files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) outputs_[f] = digest_file(f);
  }

  void write(const std::string& path) const {
    nlohmann::json j;
    j["command"] = command_;
    j["argv"] = argv_;
    j["version"] = kVersion;
    j["seed"] = seed_;
    j["started_utc"] = started_;
    j["finished_utc"] = now_iso();
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : config_.entries()) cfg[k] = v;
    j["config"] = cfg;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
  }

 private:
  static std::string now_iso() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
  }

  std::string command_;
  std::vector<std::string> argv_;
  std::string started_;
  Config config_;
  std::uint64_t seed_ = 0;
  std::map<std::string, std::string> inputs_, outputs_;
};

}  // namespace scgnn
