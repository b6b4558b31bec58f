#pragma once
// Binary model files shared by the dense and graph networks.
//
// Layout: 8-byte magic "MOLXMDL\0", u32 format version, u64 header length,
// a JSON header (kind, architecture, block list, metadata), then every
// parameter block as little-endian IEEE-754 doubles in header order.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "molexplain/densenet.hpp"
#include "molexplain/fingerprint.hpp"
#include "molexplain/gcn.hpp"

namespace molexplain::io {

inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class ModelKind { Dense, Gcn };

struct ModelMetadata {
  std::optional<std::uint64_t> seed;
  std::optional<fingerprint::FingerprintConfig> fingerprint;  // dense models over ECFP inputs
  std::vector<std::string> task_names;
  nlohmann::json extra = nlohmann::json::object();
};

struct LoadedModel {
  ModelKind kind = ModelKind::Dense;
  std::optional<nn::DenseNet> dense;
  std::optional<gcn::GraphConvNet> gcn;
  ModelMetadata metadata;
};

std::string serialize_model(const nn::DenseNet& net, const ModelMetadata& meta);
std::string serialize_model(const gcn::GraphConvNet& net, const ModelMetadata& meta);
// Throws UserError on a bad magic, unsupported version or truncated file.
LoadedModel deserialize_model(const std::string& bytes);

void save_model(const std::string& path, const nn::DenseNet& net, const ModelMetadata& meta);
void save_model(const std::string& path, const gcn::GraphConvNet& net, const ModelMetadata& meta);
LoadedModel load_model(const std::string& path);

}  // namespace molexplain::io
