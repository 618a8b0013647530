#include "zsnlu/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace zsnlu {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_tensor(std::ostream& out, const Tensor& t) {
  for (double v : t.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
}

void read_exact(std::istream& in, char* dst, std::size_t n, const std::string& what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) throw CheckpointError("truncated checkpoint: " + what);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4, "header length");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

Tensor get_tensor(std::istream& in, std::size_t rows, std::size_t cols, const std::string& name) {
  Tensor t(rows, cols);
  std::vector<unsigned char> raw(t.size() * 8);
  read_exact(in, reinterpret_cast<char*>(raw.data()), raw.size(), "tensor " + name);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(raw[i * 8 + k]) << (8 * k);
    t[i] = std::bit_cast<double>(bits);
  }
  return t;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json header;
  header["config"] = ckpt.config.to_json();
  header["epochs_completed"] = ckpt.epochs_completed;
  header["info"] = ckpt.info;
  for (ParamGroup g : kAllGroups) header["frozen"][std::string(group_name(g))] = ckpt.params.frozen(g);
  header["params"] = nlohmann::json::array();
  for (const auto& p : ckpt.params.all()) {
    header["params"].push_back(
        {{"name", p.name}, {"group", group_name(p.group)}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    header["optimizer"] = {{"learning_rate", o.config.learning_rate}, {"beta1", o.config.beta1},
                           {"beta2", o.config.beta2},                 {"epsilon", o.config.epsilon},
                           {"warmup_ratio", o.config.warmup_ratio},   {"weight_decay", o.config.weight_decay},
                           {"total_steps", o.config.total_steps},     {"step", o.step}};
  } else {
    header["optimizer"] = nullptr;
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out.write(kCheckpointMagic, 7);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : ckpt.params.all()) put_tensor(out, p.value);
  if (ckpt.optimizer) {
    for (const auto& m : ckpt.optimizer->first_moments) put_tensor(out, m);
    for (const auto& v : ckpt.optimizer->second_moments) put_tensor(out, v);
  }
  if (!out) throw CheckpointError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  char magic[7];
  read_exact(in, magic, 7, "magic");
  if (std::memcmp(magic, kCheckpointMagic, 7) != 0) {
    throw CheckpointVersionError(path + ": unsupported checkpoint version \"" + std::string(magic, 7) +
                                 "\", expected \"" + kCheckpointMagic + "\"");
  }
  const std::uint32_t length = get_u32(in);
  std::string text(length, '\0');
  read_exact(in, text.data(), length, "header");

  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(text);
    ckpt.config = ModelConfig::from_json(header.at("config"));
    ckpt.epochs_completed = header.at("epochs_completed").get<std::size_t>();
    ckpt.info = header.at("info");
    for (const auto& p : header.at("params")) {
      const auto name = p.at("name").get<std::string>();
      ckpt.params.add(name, parse_group(p.at("group").get<std::string>()),
                      get_tensor(in, p.at("rows").get<std::size_t>(), p.at("cols").get<std::size_t>(), name));
    }
    for (ParamGroup g : kAllGroups) {
      ckpt.params.set_frozen(g, header.at("frozen").at(std::string(group_name(g))).get<bool>());
    }
    if (!header.at("optimizer").is_null()) {
      const auto& o = header.at("optimizer");
      OptimizerSnapshot snap;
      snap.config.learning_rate = o.at("learning_rate").get<double>();
      snap.config.beta1 = o.at("beta1").get<double>();
      snap.config.beta2 = o.at("beta2").get<double>();
      snap.config.epsilon = o.at("epsilon").get<double>();
      snap.config.warmup_ratio = o.at("warmup_ratio").get<double>();
      snap.config.weight_decay = o.at("weight_decay").get<double>();
      snap.config.total_steps = o.at("total_steps").get<std::size_t>();
      snap.step = o.at("step").get<std::size_t>();
      for (auto* moments : {&snap.first_moments, &snap.second_moments}) {
        for (const auto& p : ckpt.params.all()) {
          moments->push_back(get_tensor(in, p.value.rows(), p.value.cols(), "moment of " + p.name));
        }
      }
      ckpt.optimizer = std::move(snap);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + ": malformed header: " + e.what());
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError(path + ": trailing bytes");
  return ckpt;
}

Checkpoint make_checkpoint(const JointModel& model) {
  Checkpoint c;
  c.config = model.config();
  c.params = model.params();
  return c;
}

JointModel model_from_checkpoint(const Checkpoint& ckpt) {
  JointModel model(ckpt.config, ckpt.params);
  return model;
}

}  // namespace zsnlu
