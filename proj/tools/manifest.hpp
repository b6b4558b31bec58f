#pragma once
// Run manifests written next to every command's outputs.
#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace molexplain::cli {

// FNV-1a 64 over the file bytes, as 16 hex digits.
std::string file_digest(const std::string& path);
std::uint64_t fnv1a64(const std::string& bytes);

// Writes bytes verbatim; creates missing parent directories.
void write_file(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

class Manifest {
 public:
  explicit Manifest(std::string command);

  nlohmann::json& config() { return config_; }
  nlohmann::json& seeds() { return seeds_; }
  nlohmann::json& results() { return results_; }

  void add_input(const std::string& path);
  // Throws UserError when the path names one of the inputs.
  void add_output(const std::string& path);

  // Digests inputs and outputs and writes the document to `path`.
  void write(const std::string& path) const;

 private:
  std::string command_;
  nlohmann::json config_ = nlohmann::json::object();
  nlohmann::json seeds_ = nlohmann::json::object();
  nlohmann::json results_ = nlohmann::json::object();
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace molexplain::cli
