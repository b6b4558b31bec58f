#include <gtest/gtest.h>

#include "molexplain/model_io.hpp"
#include "molexplain/rng.hpp"

namespace {

using namespace molexplain;

TEST(ModelIo, DenseRoundTripIsExact) {
  const nn::DenseNet net = nn::DenseNet::initialized(nn::DenseSpec{16, {8, 4}, 3}, 5);
  io::ModelMetadata meta;
  meta.seed = 5;
  meta.fingerprint = fingerprint::FingerprintConfig{1, 16};
  meta.task_names = {"a", "b", "c"};
  const std::string bytes = io::serialize_model(net, meta);
  const io::LoadedModel back = io::deserialize_model(bytes);
  ASSERT_EQ(back.kind, io::ModelKind::Dense);
  EXPECT_TRUE(*back.dense == net);
  EXPECT_EQ(back.metadata.seed, 5u);
  EXPECT_EQ(back.metadata.fingerprint->n_bits, 16u);
  EXPECT_EQ(back.metadata.task_names, meta.task_names);
  EXPECT_EQ(io::serialize_model(*back.dense, back.metadata), bytes);
}

TEST(ModelIo, GcnRoundTripIsExact) {
  gcn::GcnSpec spec = gcn::ames_gcn_preset(6, 5, 2);
  spec.skip_connections = true;
  spec.pooling = gcn::Pooling::Mean;
  const gcn::GraphConvNet net = gcn::GraphConvNet::initialized(spec, 9);
  const io::LoadedModel back = io::deserialize_model(io::serialize_model(net, {}));
  ASSERT_EQ(back.kind, io::ModelKind::Gcn);
  EXPECT_TRUE(*back.gcn == net);
}

TEST(ModelIo, RejectsVersionMismatchAndCorruption) {
  const nn::DenseNet net = nn::DenseNet::initialized(nn::DenseSpec{4, {2}, 1}, 1);
  std::string bytes = io::serialize_model(net, {});
  std::string wrong = bytes;
  wrong[8] = 2;
  try {
    io::deserialize_model(wrong);
    FAIL() << "version mismatch accepted";
  } catch (const UserError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported model format version 2"), std::string::npos);
  }
  EXPECT_THROW(io::deserialize_model(bytes.substr(0, bytes.size() - 3)), UserError);
  EXPECT_THROW(io::deserialize_model("garbage"), UserError);
  EXPECT_THROW(io::load_model("/nonexistent/model.bin"), UserError);
}

}  // namespace
