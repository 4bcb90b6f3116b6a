#include "mmseq/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mmseq/error.hpp"

namespace mmseq {

namespace {

constexpr char kMagic[8] = {'M', 'M', 'S', 'Q', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) {
    throw DataError(path + ": truncated checkpoint");
  }
  return v;
}

void put_matrix(std::ofstream& out, const Matrix& m) {
  put<std::uint64_t>(out, m.rows);
  put<std::uint64_t>(out, m.cols);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

void get_matrix_into(std::ifstream& in, Matrix& m, const std::string& path,
                     const std::string& name) {
  const std::uint64_t rows = get<std::uint64_t>(in, path);
  const std::uint64_t cols = get<std::uint64_t>(in, path);
  if (rows != m.rows || cols != m.cols) {
    throw DataError(path + ": parameter '" + name + "' is " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", model expects " + std::to_string(m.rows) + "x" +
                    std::to_string(m.cols));
  }
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  if (!in) {
    throw DataError(path + ": truncated checkpoint");
  }
}

void put_config(std::ofstream& out, const ModelConfig& cfg) {
  put<std::uint8_t>(out, cfg.cell == CellKind::lstm ? 0 : 1);
  put<std::uint8_t>(out, cfg.bidirectional ? 1 : 0);
  put<std::uint64_t>(out, cfg.num_layers);
  put<std::uint64_t>(out, cfg.hidden_dim);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(cfg.fusion.mode));
  put<std::uint64_t>(out, cfg.fusion.shared_dim);
  put<double>(out, cfg.fusion.lambda_align);
  put<std::uint8_t>(out, cfg.attention ? 1 : 0);
  put<std::uint64_t>(out, cfg.embed_dim);
  put<std::uint64_t>(out, cfg.attn_dim);
  put<std::uint8_t>(out, cfg.video_level ? 1 : 0);
  put<std::uint64_t>(out, cfg.num_classes);
  put<std::uint64_t>(out, cfg.visual_dim);
  put<std::uint64_t>(out, cfg.audio_dim);
  put<std::uint64_t>(out, cfg.max_frames);
}

ModelConfig get_config(std::ifstream& in, const std::string& path) {
  ModelConfig cfg;
  cfg.cell = get<std::uint8_t>(in, path) == 0 ? CellKind::lstm : CellKind::gru;
  cfg.bidirectional = get<std::uint8_t>(in, path) != 0;
  cfg.num_layers = get<std::uint64_t>(in, path);
  cfg.hidden_dim = get<std::uint64_t>(in, path);
  const std::uint8_t mode = get<std::uint8_t>(in, path);
  if (mode > 2) {
    throw DataError(path + ": unknown fusion mode " + std::to_string(mode));
  }
  cfg.fusion.mode = static_cast<FusionMode>(mode);
  cfg.fusion.shared_dim = get<std::uint64_t>(in, path);
  cfg.fusion.lambda_align = get<double>(in, path);
  cfg.attention = get<std::uint8_t>(in, path) != 0;
  cfg.embed_dim = get<std::uint64_t>(in, path);
  cfg.attn_dim = get<std::uint64_t>(in, path);
  cfg.video_level = get<std::uint8_t>(in, path) != 0;
  cfg.num_classes = get<std::uint64_t>(in, path);
  cfg.visual_dim = get<std::uint64_t>(in, path);
  cfg.audio_dim = get<std::uint64_t>(in, path);
  cfg.max_frames = get<std::uint64_t>(in, path);
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& m, const AdamState& state,
                     std::uint64_t step) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("save_checkpoint: cannot open '" + path + "' for writing");
  }
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put_config(out, m.cfg);
  put<std::uint64_t>(out, m.init_seed);

  put<std::uint64_t>(out, m.params.count());
  for (std::size_t i = 0; i < m.params.count(); ++i) {
    const std::string& name = m.params.name_at(i);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_matrix(out, m.params.value_at(i));
  }

  const bool has_adam = state.m.size() == m.params.count();
  put<std::uint8_t>(out, has_adam ? 1 : 0);
  if (has_adam) {
    put<std::uint64_t>(out, state.t);
    for (std::size_t i = 0; i < m.params.count(); ++i) {
      put_matrix(out, state.m[i]);
      put_matrix(out, state.n[i]);
    }
  }
  put<std::uint64_t>(out, step);
  if (!out) {
    throw DataError("save_checkpoint: write to '" + path + "' failed");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("load_checkpoint: cannot open '" + path + "'");
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path + ": not a checkpoint file");
  }
  const std::uint32_t version = get<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw DataError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const ModelConfig cfg = get_config(in, path);
  const std::uint64_t init_seed = get<std::uint64_t>(in, path);

  Checkpoint ckpt;
  ckpt.model = build_model(cfg, init_seed);

  const std::uint64_t n_params = get<std::uint64_t>(in, path);
  if (n_params != ckpt.model.params.count()) {
    throw DataError(path + ": checkpoint has " + std::to_string(n_params) +
                    " parameters, model expects " + std::to_string(ckpt.model.params.count()));
  }
  for (std::size_t i = 0; i < n_params; ++i) {
    const std::uint32_t name_len = get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (name != ckpt.model.params.name_at(i)) {
      throw DataError(path + ": parameter '" + name + "' does not match expected '" +
                      ckpt.model.params.name_at(i) + "'");
    }
    get_matrix_into(in, ckpt.model.params.value_at(i), path, name);
  }

  const bool has_adam = get<std::uint8_t>(in, path) != 0;
  if (has_adam) {
    ckpt.adam = AdamState(ckpt.model.params);
    ckpt.adam.t = get<std::uint64_t>(in, path);
    for (std::size_t i = 0; i < n_params; ++i) {
      get_matrix_into(in, ckpt.adam.m[i], path, ckpt.model.params.name_at(i) + ".m");
      get_matrix_into(in, ckpt.adam.n[i], path, ckpt.model.params.name_at(i) + ".n");
    }
  }
  ckpt.step = get<std::uint64_t>(in, path);
  return ckpt;
}

}  // namespace mmseq
