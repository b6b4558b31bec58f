#include "molexplain/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace molexplain::io {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'M', 'O', 'L', 'X', 'M', 'D', 'L', '\0'};

void put_u64(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos, int bytes) {
  if (pos + static_cast<std::size_t>(bytes) > in.size()) throw UserError("model file is truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += static_cast<std::size_t>(bytes);
  return v;
}

json dense_spec_json(const nn::DenseSpec& s) {
  return {{"input_dim", s.input_dim},
          {"hidden", s.hidden},
          {"n_tasks", s.n_tasks},
          {"hidden_activation", nn::activation_name(s.hidden_activation)},
          {"output_activation", nn::activation_name(s.output_activation)}};
}

nn::DenseSpec dense_spec_from(const json& j) {
  nn::DenseSpec s;
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  s.n_tasks = j.at("n_tasks").get<std::size_t>();
  s.hidden_activation = nn::activation_from_name(j.at("hidden_activation").get<std::string>());
  s.output_activation = nn::activation_from_name(j.at("output_activation").get<std::string>());
  return s;
}

json gcn_spec_json(const gcn::GcnSpec& s) {
  return {{"input_dim", s.input_dim},
          {"conv_widths", s.conv_widths},
          {"pooling", gcn::pooling_name(s.pooling)},
          {"skip_connections", s.skip_connections},
          {"head_hidden", s.head_hidden},
          {"head_activation", nn::activation_name(s.head_activation)},
          {"n_tasks", s.n_tasks}};
}

gcn::GcnSpec gcn_spec_from(const json& j) {
  gcn::GcnSpec s;
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.conv_widths = j.at("conv_widths").get<std::vector<std::size_t>>();
  s.pooling = gcn::pooling_from_name(j.at("pooling").get<std::string>());
  s.skip_connections = j.at("skip_connections").get<bool>();
  s.head_hidden = j.at("head_hidden").get<std::vector<std::size_t>>();
  s.head_activation = nn::activation_from_name(j.at("head_activation").get<std::string>());
  s.n_tasks = j.at("n_tasks").get<std::size_t>();
  return s;
}

json metadata_json(const ModelMetadata& m) {
  json j = json::object();
  if (m.seed) j["seed"] = *m.seed;
  if (m.fingerprint) j["fingerprint"] = {{"radius", m.fingerprint->radius}, {"n_bits", m.fingerprint->n_bits}};
  j["task_names"] = m.task_names;
  j["extra"] = m.extra;
  return j;
}

ModelMetadata metadata_from(const json& j) {
  ModelMetadata m;
  if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("fingerprint")) {
    fingerprint::FingerprintConfig fp;
    fp.radius = j.at("fingerprint").at("radius").get<int>();
    fp.n_bits = j.at("fingerprint").at("n_bits").get<std::size_t>();
    fp.validate();
    m.fingerprint = fp;
  }
  m.task_names = j.value("task_names", std::vector<std::string>{});
  m.extra = j.value("extra", json::object());
  return m;
}

struct Block {
  std::string name;
  std::span<double> data;
};

std::vector<Block> dense_blocks(nn::DenseNet& net, const std::string& prefix) {
  std::vector<Block> out;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    out.push_back({prefix + "layer" + std::to_string(l) + ".weight", net.layers()[l].weight.flat()});
    out.push_back({prefix + "layer" + std::to_string(l) + ".bias", net.layers()[l].bias});
  }
  return out;
}

std::vector<Block> gcn_blocks(gcn::GraphConvNet& net) {
  std::vector<Block> out;
  for (std::size_t l = 0; l < net.conv_layers().size(); ++l) {
    out.push_back({"conv" + std::to_string(l) + ".weight", net.conv_layers()[l].weight.flat()});
    out.push_back({"conv" + std::to_string(l) + ".bias", net.conv_layers()[l].bias});
  }
  for (Block& b : dense_blocks(net.head(), "head.")) out.push_back(b);
  return out;
}

std::string assemble(json header, const std::vector<Block>& blocks) {
  json list = json::array();
  for (const Block& b : blocks) list.push_back({{"name", b.name}, {"size", b.data.size()}});
  header["blocks"] = list;
  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_u64(out, kModelFormatVersion, 4);
  put_u64(out, text.size(), 8);
  out += text;
  for (const Block& b : blocks) {
    for (double v : b.data) put_u64(out, std::bit_cast<std::uint64_t>(v), 8);
  }
  return out;
}

void fill_blocks(const json& header, const std::vector<Block>& blocks, const std::string& bytes, std::size_t pos) {
  const json& list = header.at("blocks");
  if (list.size() != blocks.size()) throw UserError("model file block list does not match its architecture");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (list[i].at("name").get<std::string>() != blocks[i].name ||
        list[i].at("size").get<std::size_t>() != blocks[i].data.size()) {
      throw UserError("model file block '" + list[i].at("name").get<std::string>() + "' does not match its architecture");
    }
    for (double& v : blocks[i].data) v = std::bit_cast<double>(get_u64(bytes, pos, 8));
  }
  if (pos != bytes.size()) throw UserError("model file has trailing bytes");
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write model file '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw UserError("failed writing model file '" + path + "'");
}

}  // namespace

std::string serialize_model(const nn::DenseNet& net, const ModelMetadata& meta) {
  nn::DenseNet copy = net;
  json header = {{"kind", "dense"}, {"dense", dense_spec_json(net.spec())}, {"metadata", metadata_json(meta)}};
  return assemble(header, dense_blocks(copy, ""));
}

std::string serialize_model(const gcn::GraphConvNet& net, const ModelMetadata& meta) {
  gcn::GraphConvNet copy = net;
  json header = {{"kind", "gcn"}, {"gcn", gcn_spec_json(net.spec())}, {"metadata", metadata_json(meta)}};
  return assemble(header, gcn_blocks(copy));
}

LoadedModel deserialize_model(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw UserError("not a model file (bad magic)");
  }
  std::size_t pos = sizeof kMagic;
  const auto version = static_cast<std::uint32_t>(get_u64(bytes, pos, 4));
  if (version != kModelFormatVersion) {
    throw UserError("unsupported model format version " + std::to_string(version) + " (expected " +
                    std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint64_t len = get_u64(bytes, pos, 8);
  if (pos + len > bytes.size()) throw UserError("model file is truncated");
  json header;
  try {
    header = json::parse(bytes.substr(pos, len));
  } catch (const json::exception& e) {
    throw UserError(std::string("model header is not valid JSON: ") + e.what());
  }
  pos += len;

  LoadedModel out;
  try {
    out.metadata = metadata_from(header.at("metadata"));
    const std::string kind = header.at("kind").get<std::string>();
    if (kind == "dense") {
      out.kind = ModelKind::Dense;
      nn::DenseNet net(dense_spec_from(header.at("dense")));
      fill_blocks(header, dense_blocks(net, ""), bytes, pos);
      out.dense = std::move(net);
    } else if (kind == "gcn") {
      out.kind = ModelKind::Gcn;
      gcn::GraphConvNet net(gcn_spec_from(header.at("gcn")));
      fill_blocks(header, gcn_blocks(net), bytes, pos);
      out.gcn = std::move(net);
    } else {
      throw UserError("unknown model kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw UserError(std::string("malformed model header: ") + e.what());
  }
  return out;
}

void save_model(const std::string& path, const nn::DenseNet& net, const ModelMetadata& meta) {
  write_file(path, serialize_model(net, meta));
}

void save_model(const std::string& path, const gcn::GraphConvNet& net, const ModelMetadata& meta) {
  write_file(path, serialize_model(net, meta));
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace molexplain::io
