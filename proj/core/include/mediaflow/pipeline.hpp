#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace mediaflow {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Write-then-rename so a failed run never leaves a partial output in place.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Machine-readable record of one pipeline stage run. Inputs/outputs carry
// content hashes so stage manifests chain into a DAG.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void set_parameter(const std::string& key, const std::string& value);
  void set_parameter(const std::string& key, std::int64_t value);
  void set_parameter(const std::string& key, double value);
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set_timing(double duration_ms, std::uint64_t items = 0);

  const std::map<std::string, std::string>& inputs() const { return inputs_; }
  const std::map<std::string, std::string>& outputs() const { return outputs_; }

  std::string to_json() const;
  void write(const std::filesystem::path& path) const;

  static RunManifest load(const std::filesystem::path& path);

 private:
  std::string command_;
  std::map<std::string, std::string> parameters_;
  std::map<std::string, std::string> inputs_;   // path -> sha256
  std::map<std::string, std::string> outputs_;  // path -> sha256
  double duration_ms_ = 0;
  std::uint64_t items_ = 0;
  double throughput_per_s_ = 0;
};

}  // namespace mediaflow
