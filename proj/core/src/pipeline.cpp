#include "mediaflow/pipeline.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mediaflow {

using nlohmann::json;

namespace {

std::string digest_to_hex(const unsigned char* digest, unsigned int length) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("cannot initialize SHA-256");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }

  void update(const char* data, std::size_t size) {
    if (EVP_DigestUpdate(ctx_, data, size) != 1) {
      throw std::runtime_error("SHA-256 update failed");
    }
  }

  std::string finish() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_DigestFinal_ex(ctx_, digest, &length) != 1) {
      throw std::runtime_error("SHA-256 finalize failed");
    }
    return digest_to_hex(digest, length);
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 hasher;
  hasher.update(bytes.data(), bytes.size());
  return hasher.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for hashing: " + path.string());
  Sha256 hasher;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    hasher.update(buffer, static_cast<std::size_t>(in.gcount()));
  }
  return hasher.finish();
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

RunManifest::RunManifest(std::string command) : command_(std::move(command)) {}

void RunManifest::set_parameter(const std::string& key, const std::string& value) {
  parameters_[key] = value;
}
void RunManifest::set_parameter(const std::string& key, std::int64_t value) {
  parameters_[key] = std::to_string(value);
}
void RunManifest::set_parameter(const std::string& key, double value) {
  parameters_[key] = std::to_string(value);
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs_[path.filename().string()] = sha256_file(path);
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs_[path.filename().string()] = sha256_file(path);
}

void RunManifest::set_timing(double duration_ms, std::uint64_t items) {
  duration_ms_ = duration_ms;
  items_ = items;
  throughput_per_s_ = duration_ms > 0
                          ? static_cast<double>(items) / (duration_ms / 1000.0)
                          : 0.0;
}

std::string RunManifest::to_json() const {
  json obj{{"command", command_},
           {"parameters", parameters_},
           {"inputs", inputs_},
           {"outputs", outputs_},
           {"timing",
            {{"duration_ms", duration_ms_},
             {"items", items_},
             {"throughput_per_s", throughput_per_s_}}}};
  return obj.dump(2);
}

void RunManifest::write(const std::filesystem::path& path) const {
  atomic_write(path, to_json());
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  json obj = json::parse(read_file(path));
  RunManifest manifest(obj.value("command", ""));
  if (obj.contains("parameters")) {
    for (const auto& [key, value] : obj["parameters"].items()) {
      manifest.parameters_[key] = value.get<std::string>();
    }
  }
  if (obj.contains("inputs")) {
    for (const auto& [key, value] : obj["inputs"].items()) {
      manifest.inputs_[key] = value.get<std::string>();
    }
  }
  if (obj.contains("outputs")) {
    for (const auto& [key, value] : obj["outputs"].items()) {
      manifest.outputs_[key] = value.get<std::string>();
    }
  }
  return manifest;
}

}  // namespace mediaflow
