#include "mvpt/model/checkpoint.hpp"

#include <map>

#include "../binary_io.hpp"
#include "mvpt/error.hpp"

namespace mvpt::model {

std::vector<std::uint8_t> serialize_checkpoint(const Model<float>& model) {
  detail::ByteWriter w;
  const auto& c = model.config;
  w.bytes("MVPW");
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(c.arch));
  w.u32(static_cast<std::uint32_t>(c.d_in_v));
  w.u32(static_cast<std::uint32_t>(c.d_in_m));
  w.u32(static_cast<std::uint32_t>(c.d_h));
  w.u32(static_cast<std::uint32_t>(c.layers));
  w.u32(static_cast<std::uint32_t>(c.heads));
  w.u32(static_cast<std::uint32_t>(c.max_len));
  w.u32(static_cast<std::uint32_t>(c.ffn_mult));
  w.u8(c.temporal_embedding_v ? 1 : 0);
  w.u8(c.temporal_embedding_m ? 1 : 0);
  w.f32(c.temperature);
  w.u32(static_cast<std::uint32_t>(c.mlp_hidden));

  const auto params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(static_cast<std::uint32_t>(t.shape().size()));
    for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    w.f32s(t.data());
  }
  return w.take();
}

Model<float> deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "MVPW checkpoint");
  const std::string magic = r.bytes(4);
  if (magic != "MVPW") throw FormatError("checkpoint: bad magic '" + magic + "'");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  ModelConfig c;
  const std::uint8_t arch = r.u8();
  if (arch > 1) throw FormatError("checkpoint: unknown architecture code " + std::to_string(arch));
  c.arch = static_cast<Architecture>(arch);
  c.d_in_v = r.u32();
  c.d_in_m = r.u32();
  c.d_h = r.u32();
  c.layers = r.u32();
  c.heads = r.u32();
  c.max_len = r.u32();
  c.ffn_mult = r.u32();
  c.temporal_embedding_v = r.u8() != 0;
  c.temporal_embedding_m = r.u8() != 0;
  c.temperature = r.f32();
  c.mlp_hidden = r.u32();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: invalid config block: ") + e.what());
  }

  // Shapes come from the config; the blobs must agree with them.
  Model<float> model = init_model<float>(c, 0);
  std::map<std::string, numcore::Tensor<float>> by_name;
  for (auto& [name, t] : model.parameters()) by_name.emplace(name, t);

  const std::uint32_t count = r.u32();
  if (count != by_name.size()) {
    throw FormatError("checkpoint: expected " + std::to_string(by_name.size()) +
                      " parameters, file has " + std::to_string(count));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.u32());
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint: unexpected parameter '" + name + "'");
    const std::uint32_t rank = r.u32();
    numcore::Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != it->second.shape()) {
      throw FormatError("checkpoint: parameter '" + name + "' has shape " +
                        numcore::shape_string(shape) + ", config implies " +
                        numcore::shape_string(it->second.shape()));
    }
    r.f32s(it->second.mutable_data());
    by_name.erase(it);
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes after parameters");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model) {
  detail::write_file(path, serialize_checkpoint(model));
}

Model<float> load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(detail::read_file(path));
}

}  // namespace mvpt::model
