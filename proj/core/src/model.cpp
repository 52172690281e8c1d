#include "vroc/model.hpp"

#include <utility>

#include "vroc/rng.hpp"

namespace vroc {

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.image_size = 64;
  c.patch_size = 8;
  c.frames = 8;
  c.d_model = 64;
  c.n_layers = 4;
  c.n_heads = 4;
  c.dropout_p = 0.1;
  c.fps = 8.0;
  return c;
}

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.image_size = 224;
  c.patch_size = 16;
  c.frames = 8;
  c.d_model = 768;
  c.n_layers = 12;
  c.n_heads = 12;
  c.dropout_p = 0.1;
  c.fps = 8.0;
  return c;
}

void ModelConfig::validate() const {
  if (image_size <= 0 || patch_size <= 0 || image_size % patch_size != 0)
    throw ConfigError("model: image_size " + std::to_string(image_size) +
                      " not divisible by patch_size " + std::to_string(patch_size));
  if (d_model <= 0 || n_heads <= 0 || d_model % n_heads != 0)
    throw ConfigError("model: d_model " + std::to_string(d_model) + " not divisible by " +
                      std::to_string(n_heads) + " heads");
  if (frames < 1 || n_layers < 1 || mlp_ratio < 1 || n_classes != 2)
    throw ConfigError("model: invalid frames/layers/mlp_ratio/classes");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw ConfigError("model: dropout_p outside [0,1)");
}

ModelWeights ModelWeights::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  constexpr double kStd = 0.02;
  const int d = cfg.d_model;
  ModelWeights w;
  w.cfg = cfg;
  w.patch_proj = Tensor::randn({cfg.patch_dim(), d}, rng, kStd);
  w.patch_bias = Tensor::zeros({d});
  w.cls = Tensor::randn({1, d}, rng, kStd);
  w.pos_spatial = Tensor::randn({cfg.patches_per_frame() + 1, d}, rng, kStd);
  w.pos_temporal = Tensor::randn({cfg.frames, d}, rng, kStd);
  w.layers.resize(static_cast<std::size_t>(cfg.n_layers));
  for (auto& l : w.layers) {
    l.ln1_g = Tensor::full({d}, 1.0);
    l.ln1_b = Tensor::zeros({d});
    l.time_qkv_w = Tensor::randn({d, 3 * d}, rng, kStd);
    l.time_qkv_b = Tensor::zeros({3 * d});
    l.time_out_w = Tensor::randn({d, d}, rng, kStd);
    l.time_out_b = Tensor::zeros({d});
    l.ln2_g = Tensor::full({d}, 1.0);
    l.ln2_b = Tensor::zeros({d});
    l.space_qkv_w = Tensor::randn({d, 3 * d}, rng, kStd);
    l.space_qkv_b = Tensor::zeros({3 * d});
    l.space_out_w = Tensor::randn({d, d}, rng, kStd);
    l.space_out_b = Tensor::zeros({d});
    l.ln3_g = Tensor::full({d}, 1.0);
    l.ln3_b = Tensor::zeros({d});
    l.mlp_fc1_w = Tensor::randn({d, cfg.mlp_ratio * d}, rng, kStd);
    l.mlp_fc1_b = Tensor::zeros({cfg.mlp_ratio * d});
    l.mlp_fc2_w = Tensor::randn({cfg.mlp_ratio * d, d}, rng, kStd);
    l.mlp_fc2_b = Tensor::zeros({d});
  }
  w.final_ln_g = Tensor::full({d}, 1.0);
  w.final_ln_b = Tensor::zeros({d});
  w.head_w = Tensor::randn({d, cfg.n_classes}, rng, kStd);
  w.head_b = Tensor::zeros({cfg.n_classes});
  return w;
}

std::vector<ParamRef> ModelWeights::params() {
  std::vector<ParamRef> out;
  auto add = [&out](const std::string& name, const Tensor& t, bool decay) {
    out.push_back(ParamRef{name, t, decay, 0});
  };
  add("patch_proj", patch_proj, true);
  add("patch_bias", patch_bias, false);
  add("cls", cls, true);
  add("pos_spatial", pos_spatial, true);
  add("pos_temporal", pos_temporal, true);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string p = "layers." + std::to_string(i) + ".";
    LayerWeights& l = layers[i];
    add(p + "ln1_g", l.ln1_g, false);
    add(p + "ln1_b", l.ln1_b, false);
    add(p + "time_qkv_w", l.time_qkv_w, true);
    add(p + "time_qkv_b", l.time_qkv_b, false);
    add(p + "time_out_w", l.time_out_w, true);
    add(p + "time_out_b", l.time_out_b, false);
    add(p + "ln2_g", l.ln2_g, false);
    add(p + "ln2_b", l.ln2_b, false);
    add(p + "space_qkv_w", l.space_qkv_w, true);
    add(p + "space_qkv_b", l.space_qkv_b, false);
    add(p + "space_out_w", l.space_out_w, true);
    add(p + "space_out_b", l.space_out_b, false);
    add(p + "ln3_g", l.ln3_g, false);
    add(p + "ln3_b", l.ln3_b, false);
    add(p + "mlp_fc1_w", l.mlp_fc1_w, true);
    add(p + "mlp_fc1_b", l.mlp_fc1_b, false);
    add(p + "mlp_fc2_w", l.mlp_fc2_w, true);
    add(p + "mlp_fc2_b", l.mlp_fc2_b, false);
  }
  add("final_ln_g", final_ln_g, false);
  add("final_ln_b", final_ln_b, false);
  add("head_w", head_w, true);
  add("head_b", head_b, false);
  return out;
}

void ModelWeights::set_requires_grad(bool rg) {
  for (ParamRef& p : params()) p.tensor.set_requires_grad(rg);
}

AttentionLayout AttentionLayout::build(const ModelConfig& cfg) {
  const int T = cfg.frames;
  const int N = cfg.patches_per_frame();
  auto time = std::make_shared<AttentionGroups>();
  time->reserve(static_cast<std::size_t>(N));
  for (int s = 0; s < N; ++s) {
    std::vector<int> g(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) g[static_cast<std::size_t>(t)] = 1 + t * N + s;
    time->push_back(std::move(g));
  }
  auto space = std::make_shared<AttentionGroups>();
  space->reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    std::vector<int> g;
    g.reserve(static_cast<std::size_t>(N) + 1);
    g.push_back(0);  // per-frame CLS copy
    for (int s = 0; s < N; ++s) g.push_back(1 + t * N + s);
    space->push_back(std::move(g));
  }
  AttentionLayout layout;
  layout.time_groups = std::move(time);
  layout.space_groups = std::move(space);
  return layout;
}

namespace {

// Shared patch-flattening walk over one frame's pixel accessor.
template <typename PixelFn>
void flatten_frame(const ModelConfig& cfg, int t, std::vector<double>& rows, PixelFn&& pixel) {
  const int P = cfg.patch_size;
  const int G = cfg.grid();
  const int N = cfg.patches_per_frame();
  const int pd = cfg.patch_dim();
  for (int py = 0; py < G; ++py)
    for (int px = 0; px < G; ++px) {
      double* row = rows.data() + (static_cast<std::size_t>(t) * N + py * G + px) * pd;
      int k = 0;
      for (int y = 0; y < P; ++y)
        for (int x = 0; x < P; ++x)
          for (int c = 0; c < 3; ++c) {
            const double v = pixel(px * P + x, py * P + y, c);  // in [0,1]
            row[k++] = (v - 0.5) / 0.5;
          }
    }
}

}  // namespace

Tensor patchify(const ModelConfig& cfg, const Clip& clip) {
  if (static_cast<int>(clip.size()) != cfg.frames)
    throw ShapeMismatchError("patchify: clip has " + std::to_string(clip.size()) +
                             " frames, config wants " + std::to_string(cfg.frames));
  std::vector<double> rows(static_cast<std::size_t>(cfg.frames) * cfg.patches_per_frame() *
                           cfg.patch_dim());
  for (int t = 0; t < cfg.frames; ++t) {
    const Image& img = clip[static_cast<std::size_t>(t)];
    if (img.width != cfg.image_size || img.height != cfg.image_size)
      throw ShapeMismatchError("patchify: frame " + std::to_string(t) + " is " +
                               std::to_string(img.width) + "x" + std::to_string(img.height) +
                               ", config wants " + std::to_string(cfg.image_size));
    flatten_frame(cfg, t, rows, [&img](int x, int y, int c) { return img.at(x, y, c) / 255.0; });
  }
  return Tensor::from_data({cfg.frames * cfg.patches_per_frame(), cfg.patch_dim()},
                           std::move(rows));
}

Tensor patchify_values(const ModelConfig& cfg, std::span<const double> clip_values) {
  const std::size_t hw = static_cast<std::size_t>(cfg.image_size) * cfg.image_size * 3;
  if (clip_values.size() != hw * static_cast<std::size_t>(cfg.frames))
    throw ShapeMismatchError("patchify_values: expected " +
                             std::to_string(hw * static_cast<std::size_t>(cfg.frames)) +
                             " values, got " + std::to_string(clip_values.size()));
  std::vector<double> rows(static_cast<std::size_t>(cfg.frames) * cfg.patches_per_frame() *
                           cfg.patch_dim());
  for (int t = 0; t < cfg.frames; ++t) {
    const double* f = clip_values.data() + static_cast<std::size_t>(t) * hw;
    flatten_frame(cfg, t, rows, [f, w = cfg.image_size](int x, int y, int c) {
      return f[(static_cast<std::size_t>(y) * w + x) * 3 + c];
    });
  }
  return Tensor::from_data({cfg.frames * cfg.patches_per_frame(), cfg.patch_dim()},
                           std::move(rows));
}

Tensor embed_tokens(Tape& tape, const ModelWeights& w, const Clip& clip,
                    const std::optional<Tensor>& fused, std::uint64_t dropout_seed) {
  return embed_tokens_from_patches(tape, w, patchify(w.cfg, clip), fused, dropout_seed);
}

Tensor embed_tokens_from_patches(Tape& tape, const ModelWeights& w, const Tensor& patches,
                                 const std::optional<Tensor>& fused,
                                 std::uint64_t dropout_seed) {
  const ModelConfig& cfg = w.cfg;
  const int T = cfg.frames;
  const int N = cfg.patches_per_frame();
  if (patches.ndim() != 2 || patches.dim(0) != T * N || patches.dim(1) != cfg.patch_dim())
    throw ShapeMismatchError("embed_tokens: patches must be [" + std::to_string(T * N) + "," +
                             std::to_string(cfg.patch_dim()) + "], got " +
                             shape_str(patches.shape()));
  Tensor tokens = tape.add_rows(tape.matmul(patches, w.patch_proj), w.patch_bias);

  if (fused) {
    if (fused->ndim() != 2 || fused->dim(0) != T || fused->dim(1) != cfg.d_model)
      throw ShapeMismatchError("embed_tokens: fused rows must be [" + std::to_string(T) + "," +
                               std::to_string(cfg.d_model) + "], got " +
                               shape_str(fused->shape()));
    std::vector<int> frame_of_token(static_cast<std::size_t>(T * N));
    for (int t = 0; t < T; ++t)
      for (int s = 0; s < N; ++s) frame_of_token[static_cast<std::size_t>(t * N + s)] = t;
    tokens = tape.add(tokens, tape.gather_rows(*fused, frame_of_token));
  }

  // Positional embeddings: spatial rows 1..N per frame, temporal row t
  // for every patch of frame t; CLS gets spatial row 0 only.
  std::vector<int> spatial_idx(static_cast<std::size_t>(T * N));
  std::vector<int> temporal_idx(static_cast<std::size_t>(T * N));
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < N; ++s) {
      spatial_idx[static_cast<std::size_t>(t * N + s)] = 1 + s;
      temporal_idx[static_cast<std::size_t>(t * N + s)] = t;
    }
  tokens = tape.add(tokens, tape.gather_rows(w.pos_spatial, spatial_idx));
  tokens = tape.add(tokens, tape.gather_rows(w.pos_temporal, temporal_idx));

  const std::vector<int> cls_pos_idx{0};
  Tensor cls_row = tape.add(w.cls, tape.gather_rows(w.pos_spatial, cls_pos_idx));
  Tensor z = tape.concat_rows(cls_row, tokens);
  return tape.dropout(z, cfg.dropout_p, mix_seed(dropout_seed, 0));
}

namespace {

Tensor attn_sublayer(Tape& tape, const Tensor& z, const Tensor& ln_g, const Tensor& ln_b,
                     const Tensor& qkv_w, const Tensor& qkv_b, const Tensor& out_w,
                     const Tensor& out_b, const AttentionGroupsPtr& groups, int n_heads,
                     double dropout_p, std::uint64_t seed) {
  Tensor h = tape.layer_norm(z, ln_g, ln_b);
  h = tape.grouped_mha(h, groups, qkv_w, qkv_b, out_w, out_b, n_heads);
  h = tape.dropout(h, dropout_p, seed);
  return tape.add(z, h);
}

}  // namespace

Tensor divided_block(Tape& tape, const ModelWeights& w, const AttentionLayout& layout,
                     const Tensor& z, int layer_index, std::uint64_t dropout_seed) {
  const ModelConfig& cfg = w.cfg;
  if (z.ndim() != 2 || z.dim(0) != cfg.tokens() || z.dim(1) != cfg.d_model)
    throw ShapeMismatchError("divided_block: tokens must be [" + std::to_string(cfg.tokens()) +
                             "," + std::to_string(cfg.d_model) + "], got " +
                             shape_str(z.shape()));
  if (layer_index < 0 || layer_index >= cfg.n_layers)
    throw IndexOutOfRangeError("divided_block: layer " + std::to_string(layer_index));
  const LayerWeights& l = w.layers[static_cast<std::size_t>(layer_index)];
  const std::uint64_t base = mix_seed(dropout_seed, 1 + static_cast<std::uint64_t>(layer_index));

  Tensor z1 = attn_sublayer(tape, z, l.ln1_g, l.ln1_b, l.time_qkv_w, l.time_qkv_b, l.time_out_w,
                            l.time_out_b, layout.time_groups, cfg.n_heads, cfg.dropout_p,
                            mix_seed(base, 1));
  Tensor z2 = attn_sublayer(tape, z1, l.ln2_g, l.ln2_b, l.space_qkv_w, l.space_qkv_b,
                            l.space_out_w, l.space_out_b, layout.space_groups, cfg.n_heads,
                            cfg.dropout_p, mix_seed(base, 2));

  Tensor h = tape.layer_norm(z2, l.ln3_g, l.ln3_b);
  h = tape.add_rows(tape.matmul(h, l.mlp_fc1_w), l.mlp_fc1_b);
  h = tape.gelu(h);
  h = tape.add_rows(tape.matmul(h, l.mlp_fc2_w), l.mlp_fc2_b);
  h = tape.dropout(h, cfg.dropout_p, mix_seed(base, 3));
  return tape.add(z2, h);
}

Tensor forward_classify(Tape& tape, const ModelWeights& w, const AttentionLayout& layout,
                        const Clip& clip, const std::optional<Tensor>& fused,
                        std::uint64_t dropout_seed) {
  Tensor z = embed_tokens(tape, w, clip, fused, dropout_seed);
  for (int i = 0; i < w.cfg.n_layers; ++i)
    z = divided_block(tape, w, layout, z, i, dropout_seed);
  const std::vector<int> cls_idx{0};
  Tensor cls_state = tape.gather_rows(z, cls_idx);
  cls_state = tape.layer_norm(cls_state, w.final_ln_g, w.final_ln_b);
  Tensor logits = tape.add_rows(tape.matmul(cls_state, w.head_w), w.head_b);
  return tape.reshape(logits, {w.cfg.n_classes});
}

}  // namespace vroc
