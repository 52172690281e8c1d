#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vroc/image.hpp"
#include "vroc/tensor.hpp"

namespace vroc {

struct ModelConfig {
  int image_size = 64;
  int patch_size = 8;
  int frames = 8;        // T
  int d_model = 64;
  int n_layers = 4;
  int n_heads = 4;
  int mlp_ratio = 4;
  double dropout_p = 0.1;
  int n_classes = 2;
  double fps = 8.0;

  static ModelConfig desk();
  static ModelConfig paper();

  int grid() const { return image_size / patch_size; }
  int patches_per_frame() const { return grid() * grid(); }  // N
  int patch_dim() const { return 3 * patch_size * patch_size; }
  int tokens() const { return frames * patches_per_frame() + 1; }
  void validate() const;  // throws ConfigError
};

// One optimizable tensor plus its weight-decay treatment.
struct ParamRef {
  std::string name;
  Tensor tensor;
  bool decay = true;
  // Leading rows excluded from decay (embedding padding rows).
  int skip_decay_rows = 0;
};

struct LayerWeights {
  Tensor ln1_g, ln1_b;
  Tensor time_qkv_w, time_qkv_b, time_out_w, time_out_b;
  Tensor ln2_g, ln2_b;
  Tensor space_qkv_w, space_qkv_b, space_out_w, space_out_b;
  Tensor ln3_g, ln3_b;
  Tensor mlp_fc1_w, mlp_fc1_b, mlp_fc2_w, mlp_fc2_b;
};

// All visual-path parameters. Event-fusion parameters live in
// FusionWeights (fusion.hpp); together they form the full Model B.
struct ModelWeights {
  ModelConfig cfg;
  Tensor patch_proj;    // [3P^2, d]
  Tensor patch_bias;    // [d]
  Tensor cls;           // [1, d]
  Tensor pos_spatial;   // [N+1, d] (row 0 belongs to CLS)
  Tensor pos_temporal;  // [T, d]
  std::vector<LayerWeights> layers;
  Tensor final_ln_g, final_ln_b;
  Tensor head_w;  // [d, 2]
  Tensor head_b;  // [2]

  // Matrix entries drawn from N(0, 0.02^2); biases and layer-norm
  // shifts zero, layer-norm gains one.
  static ModelWeights init(const ModelConfig& cfg, std::uint64_t seed);
  std::vector<ParamRef> params();  // stable order
  void set_requires_grad(bool rg);
};

// Row-index groups for the two factorized attention passes over the
// token layout [CLS, frame0 patches.., frame1 patches.., ...].
struct AttentionLayout {
  AttentionGroupsPtr time_groups;   // N groups of T rows; CLS in none
  AttentionGroupsPtr space_groups;  // T groups of N+1 rows; CLS in all
  static AttentionLayout build(const ModelConfig& cfg);
};

// A clip is T frames at the model's native resolution.
using Clip = std::vector<Image>;

// Flattens non-overlapping patches into rows of [T*N, 3P^2], mapping
// bytes to [0,1] and then normalizing with mean 0.5 / scale 0.5 per
// channel. Patch rows are ordered frame-major, then patch row-major;
// within a patch, pixel y, then x, then channel.
Tensor patchify(const ModelConfig& cfg, const Clip& clip);

// Same layout for a clip already given as [0,1] floats (t-major, then
// y, x, channel), length T*H*W*3.
Tensor patchify_values(const ModelConfig& cfg, std::span<const double> clip_values);

// Projects patches and adds CLS + positional embeddings. `fused`, when
// present, is a [T, d] tensor whose row t is broadcast-added to every
// patch token of frame t before positional embeddings. Returns the full
// token matrix [(T*N+1), d] with CLS at row 0.
Tensor embed_tokens(Tape& tape, const ModelWeights& w, const Clip& clip,
                    const std::optional<Tensor>& fused, std::uint64_t dropout_seed);

// Same, starting from an already-flattened patch matrix [T*N, 3P^2].
Tensor embed_tokens_from_patches(Tape& tape, const ModelWeights& w, const Tensor& patches,
                                 const std::optional<Tensor>& fused,
                                 std::uint64_t dropout_seed);

// z' = z + TimeAttn(LN(z)); z'' = z' + SpaceAttn(LN(z')); out = z'' +
// MLP(LN(z'')). CLS skips temporal attention via the residual; spatial
// attention sees a per-frame CLS copy whose outputs are averaged.
Tensor divided_block(Tape& tape, const ModelWeights& w, const AttentionLayout& layout,
                     const Tensor& z, int layer_index, std::uint64_t dropout_seed);

// Full forward pass to two logits (win=class 0 as attacker win; see
// dataset.hpp for the label convention).
Tensor forward_classify(Tape& tape, const ModelWeights& w, const AttentionLayout& layout,
                        const Clip& clip, const std::optional<Tensor>& fused,
                        std::uint64_t dropout_seed);

}  // namespace vroc
