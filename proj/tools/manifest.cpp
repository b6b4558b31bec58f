#include "manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "molexplain/error.hpp"
#include "molexplain/kernels.hpp"
#include "molexplain/parallel.hpp"

namespace molexplain::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_digest(const std::string& path) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(read_file(path))));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  const fs::path parent = fs::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) fs::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UserError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw UserError("write failed for '" + path + "'");
}

Manifest::Manifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

void Manifest::add_input(const std::string& path) { inputs_.push_back(path); }

void Manifest::add_output(const std::string& path) {
  std::error_code ec;
  for (const std::string& in : inputs_) {
    if (fs::exists(path, ec) && fs::equivalent(in, path, ec)) {
      throw UserError("output '" + path + "' would overwrite input '" + in + "'");
    }
  }
  outputs_.push_back(path);
}

void Manifest::write(const std::string& path) const {
  auto digests = [](const std::vector<std::string>& paths) {
    json arr = json::array();
    for (const std::string& p : paths) arr.push_back({{"path", p}, {"fnv1a64", file_digest(p)}});
    return arr;
  };
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  const json doc = {{"command", command_},
                    {"version", MOLEXPLAIN_VERSION},
                    {"config", config_},
                    {"seeds", seeds_},
                    {"inputs", digests(inputs_)},
                    {"outputs", digests(outputs_)},
                    {"kernel_backend", std::string(kernels::backend_name(kernels::active().backend))},
                    {"threads", max_threads()},
                    {"wall_clock_seconds", seconds},
                    {"results", results_}};
  write_file(path, doc.dump(2) + "\n");
}

}  // namespace molexplain::cli
