#include "vroc/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "vroc/errors.hpp"

namespace vroc {

void TrainConfig::validate() const {
  if (!(lr_max > 0.0)) throw ConfigError("train: lr_max must be > 0");
  if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
  if (warmup_steps < 0) throw ConfigError("train: warmup_steps must be >= 0");
  if (total_steps != 0 && warmup_steps >= total_steps)
    throw ConfigError("train: warmup_steps must be < total_steps");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("train: betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("train: adam_eps must be > 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (samples_per_epoch < 0) throw ConfigError("train: samples_per_epoch must be >= 0");
  if (fusion_d_e < 1) throw ConfigError("train: fusion_d_e must be >= 1");
  if (val_stride < 1) throw ConfigError("train: val_stride must be >= 1");
  if (val_rounds_cap < 0) throw ConfigError("train: val_rounds_cap must be >= 0");
  if (!(diverged_loss > 0.0)) throw ConfigError("train: diverged_loss must be > 0");
}

double lr_at(int step, const TrainConfig& cfg) {
  const int w = cfg.warmup_steps;
  const int s = cfg.total_steps;
  if (step < w) return cfg.lr_max * static_cast<double>(step) / static_cast<double>(w);
  if (step >= s) return 0.0;
  const double phase =
      std::numbers::pi * static_cast<double>(step - w) / static_cast<double>(s - w);
  return 0.5 * cfg.lr_max * (1.0 + std::cos(phase));
}

AdamWState AdamWState::init(std::span<const ParamRef> params) {
  AdamWState st;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const ParamRef& p : params) {
    st.m.push_back(Tensor::zeros(p.tensor.shape()));
    st.v.push_back(Tensor::zeros(p.tensor.shape()));
  }
  return st;
}

void adamw_step(std::span<ParamRef> params, AdamWState& st, const TrainConfig& cfg,
                double grad_scale) {
  if (params.size() != st.m.size() || params.size() != st.v.size())
    throw ShapeMismatchError("adamw_step: state holds " + std::to_string(st.m.size()) +
                             " moment pairs for " + std::to_string(params.size()) + " params");
  // Validate every gradient before touching any state, so a bad batch
  // leaves weights and moments exactly as they were.
  for (const ParamRef& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad())
      if (!std::isfinite(g))
        throw NonFiniteError("adamw_step: non-finite gradient in '" + p.name +
                             "'; step rejected");
  }

  const double lr = lr_at(static_cast<int>(st.step), cfg);
  st.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamRef& p = params[i];
    std::span<double> w = p.tensor.mutable_data();
    std::span<double> m = st.m[i].mutable_data();
    std::span<double> v = st.v[i].mutable_data();
    if (m.size() != w.size())
      throw ShapeMismatchError("adamw_step: moment/param size mismatch for '" + p.name + "'");
    std::span<const double> g_buf =
        p.tensor.has_grad() ? p.tensor.grad() : std::span<const double>{};

    std::size_t decay_from = w.size();
    if (p.decay) {
      decay_from = 0;
      if (p.skip_decay_rows > 0 && p.tensor.ndim() >= 2) {
        std::size_t row = 1;
        for (int d = 1; d < p.tensor.ndim(); ++d) row *= static_cast<std::size_t>(p.tensor.dim(d));
        decay_from = static_cast<std::size_t>(p.skip_decay_rows) * row;
      }
    }

    for (std::size_t j = 0; j < w.size(); ++j) {
      if (p.decay && j >= decay_from) w[j] *= 1.0 - lr * cfg.weight_decay;
      const double g = g_buf.empty() ? 0.0 : g_buf[j] * grad_scale;
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      w[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg.adam_eps);
    }
    p.tensor.zero_grad();
  }
}

EarlyStopper::EarlyStopper(int patience)
    : patience_(patience), best_value_(-std::numeric_limits<double>::infinity()) {
  if (patience < 1) throw ConfigError("EarlyStopper: patience must be >= 1");
}

bool EarlyStopper::observe(double value) {
  ++epoch_;
  if (value > best_value_) {
    best_value_ = value;
    best_epoch_ = epoch_;
  }
  return epoch_ - best_epoch_ >= patience_;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::uint64_t fnv1a64(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr char kMagic[5] = {'V', 'R', 'O', 'C', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

void put_blobs(std::string& out, const std::vector<TensorBlob>& blobs) {
  put_u32(out, static_cast<std::uint32_t>(blobs.size()));
  for (const TensorBlob& b : blobs) {
    put_u32(out, static_cast<std::uint32_t>(b.name.size()));
    out.append(b.name);
    put_u32(out, static_cast<std::uint32_t>(b.shape.size()));
    std::size_t numel = 1;
    for (int d : b.shape) {
      put_u32(out, static_cast<std::uint32_t>(d));
      numel *= static_cast<std::size_t>(d);
    }
    if (numel != b.data.size())
      throw CheckpointError("blob '" + b.name + "' holds " + std::to_string(b.data.size()) +
                            " values for shape " + shape_str(b.shape));
    for (float f : b.data) put_f32(out, f);
  }
}

class ByteReader {
 public:
  explicit ByteReader(const std::string& buf) : buf_(buf) {}

  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw CheckpointError("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  const std::string& buf_;
  std::size_t pos_ = 0;
};

std::vector<TensorBlob> read_blobs(ByteReader& r) {
  std::vector<TensorBlob> blobs(r.u32());
  for (TensorBlob& b : blobs) {
    b.name = r.bytes(r.u32());
    b.shape.resize(static_cast<std::size_t>(r.u32()));
    std::size_t numel = 1;
    for (int& d : b.shape) {
      d = static_cast<int>(r.u32());
      numel *= static_cast<std::size_t>(d);
    }
    b.data.resize(numel);
    for (float& f : b.data) f = r.f32();
  }
  return blobs;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u64(out, fnv1a64(c.config_json));
  put_u32(out, static_cast<std::uint32_t>(c.config_json.size()));
  out.append(c.config_json);
  put_blobs(out, c.params);
  put_blobs(out, c.moments);
  put_u64(out, c.step);
  for (std::uint64_t s : c.rng.s) put_u64(out, s);
  out.push_back(c.rng.have_spare ? '\1' : '\0');
  std::uint64_t spare_bits;
  std::memcpy(&spare_bits, &c.rng.spare, 8);
  put_u64(out, spare_bits);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string buf = ss.str();

  ByteReader r(buf);
  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw CheckpointError("bad magic in " + path);
  Checkpoint c;
  const std::uint64_t stored_hash = r.u64();
  c.config_json = r.bytes(r.u32());
  if (fnv1a64(c.config_json) != stored_hash)
    throw CheckpointError("config hash mismatch in " + path);
  c.params = read_blobs(r);
  c.moments = read_blobs(r);
  c.step = r.u64();
  for (std::uint64_t& s : c.rng.s) s = r.u64();
  c.rng.have_spare = r.bytes(1)[0] != '\0';
  std::uint64_t spare_bits = r.u64();
  std::memcpy(&c.rng.spare, &spare_bits, 8);
  if (!r.at_end()) throw CheckpointError("trailing bytes in " + path);
  return c;
}

namespace {

TensorBlob blob_of(const std::string& name, const Tensor& t) {
  TensorBlob b;
  b.name = name;
  b.shape = t.shape();
  b.data.reserve(t.numel());
  for (double x : t.data()) b.data.push_back(static_cast<float>(x));
  return b;
}

}  // namespace

Checkpoint make_checkpoint(const std::string& config_json, std::span<const ParamRef> params,
                           const AdamWState* st, const Rng::State& rng, std::uint64_t step) {
  Checkpoint c;
  c.config_json = config_json;
  for (const ParamRef& p : params) c.params.push_back(blob_of(p.name, p.tensor));
  if (st != nullptr) {
    if (st->m.size() != params.size())
      throw ShapeMismatchError("make_checkpoint: moments misaligned with params");
    for (std::size_t i = 0; i < params.size(); ++i)
      c.moments.push_back(blob_of("adam.m." + params[i].name, st->m[i]));
    for (std::size_t i = 0; i < params.size(); ++i)
      c.moments.push_back(blob_of("adam.v." + params[i].name, st->v[i]));
  }
  c.step = step;
  c.rng = rng;
  return c;
}

namespace {

void copy_blob_into(const TensorBlob& b, Tensor& t, const std::string& what) {
  if (b.shape != t.shape())
    throw CheckpointError(what + " '" + b.name + "' has shape " + shape_str(b.shape) +
                          ", expected " + shape_str(t.shape()));
  std::span<double> out = t.mutable_data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(b.data[i]);
}

}  // namespace

void restore_params(const Checkpoint& c, std::span<ParamRef> params) {
  std::unordered_map<std::string, const TensorBlob*> by_name;
  for (const TensorBlob& b : c.params) by_name[b.name] = &b;
  for (ParamRef& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end())
      throw CheckpointError("checkpoint is missing param '" + p.name + "'");
    copy_blob_into(*it->second, p.tensor, "param");
  }
}

void restore_moments(const Checkpoint& c, std::span<ParamRef> params, AdamWState& st) {
  if (st.m.size() != params.size() || st.v.size() != params.size())
    throw ShapeMismatchError("restore_moments: state misaligned with params");
  std::unordered_map<std::string, const TensorBlob*> by_name;
  for (const TensorBlob& b : c.moments) by_name[b.name] = &b;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (const char* kind : {"m", "v"}) {
      const std::string name = std::string("adam.") + kind + "." + params[i].name;
      auto it = by_name.find(name);
      if (it == by_name.end())
        throw CheckpointError("checkpoint is missing moment '" + name + "'");
      copy_blob_into(*it->second, kind[0] == 'm' ? st.m[i] : st.v[i], "moment");
    }
  }
  st.step = static_cast<std::int64_t>(c.step);
}

// ---------------------------------------------------------------------------
// Training loop

std::string history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,train_loss,val_accuracy,lr\n";
  char line[128];
  for (const EpochStats& h : history) {
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g\n", h.epoch, h.train_loss,
                  h.val_accuracy, h.lr);
    out += line;
  }
  return out;
}

namespace {

// Per-second accuracy over the given rounds: fraction correct among
// rounds alive at each evaluated second, averaged unweighted over the
// seconds -- the evaluator's metric, restricted to every `stride`-th
// second to keep epochs affordable.
double val_accuracy(const ClipDataset& ds, const ModelWeights& w, const FusionWeights& fw,
                    const AttentionLayout& layout, const TrainConfig& cfg,
                    std::span<const int> rounds) {
  std::map<int, std::pair<int, int>> correct_alive;
  for (int round : rounds) {
    const int label = ds.label(round);
    const int mt = ds.max_t(round);
    for (int t = 1; t <= mt; t += cfg.val_stride) {
      Tape tape(TapeOptions{.recording = false, .train_mode = false, .check_finite = true});
      const Clip clip = ds.clip(round, t);
      std::optional<Tensor> fused;
      if (cfg.events_enabled) {
        const std::vector<EventLabel> events = ds.events_until(round, t);
        const std::vector<int> idx = clip_frame_indices(ds.mode(), t);
        fused = fused_for_clip(tape, fw, ds.vocab(), events, t, idx, ds.fps());
      }
      const Tensor logits = forward_classify(tape, w, layout, clip, fused, 0);
      auto& [n_correct, n_alive] = correct_alive[t];
      n_alive += 1;
      n_correct += predicted_class(logits) == label ? 1 : 0;
    }
  }
  if (correct_alive.empty()) throw EmptySplitError("validation produced no predictions");
  double sum = 0.0;
  for (const auto& [t, ca] : correct_alive)
    sum += static_cast<double>(ca.first) / static_cast<double>(ca.second);
  return sum / static_cast<double>(correct_alive.size());
}

}  // namespace

TrainResult train(const ClipDataset& ds, const ModelConfig& mcfg, const TrainConfig& cfg,
                  const std::string& config_json) {
  cfg.validate();
  const std::vector<int> train_idx = ds.split_indices("train");
  std::vector<int> val_idx = ds.split_indices("val");
  if (train_idx.empty()) throw EmptySplitError("train split is empty");
  if (val_idx.empty()) throw EmptySplitError("val split is empty");
  if (cfg.val_rounds_cap > 0 && static_cast<int>(val_idx.size()) > cfg.val_rounds_cap)
    val_idx.resize(static_cast<std::size_t>(cfg.val_rounds_cap));

  const AttentionLayout layout = AttentionLayout::build(mcfg);
  ModelWeights w = ModelWeights::init(mcfg, mix_seed(cfg.seed, 1));
  FusionWeights fw =
      FusionWeights::init(cfg.fusion_d_e, mcfg.d_model, static_cast<int>(ds.vocab().agents.size()),
                          static_cast<int>(ds.vocab().areas.size()), mix_seed(cfg.seed, 2));
  w.set_requires_grad(true);
  std::vector<ParamRef> params = w.params();
  if (cfg.events_enabled) {
    fw.set_requires_grad(true);
    for (ParamRef& p : fw.params()) params.push_back(p);
  }
  AdamWState opt = AdamWState::init(params);

  const int samples_per_epoch = cfg.samples_per_epoch > 0
                                    ? cfg.samples_per_epoch
                                    : static_cast<int>(train_idx.size());
  const int steps_per_epoch = (samples_per_epoch + cfg.batch_size - 1) / cfg.batch_size;
  TrainConfig sched = cfg;
  if (sched.total_steps == 0) sched.total_steps = cfg.max_epochs * steps_per_epoch;
  sched.validate();

  Rng rng(mix_seed(cfg.seed, 3));
  EarlyStopper stopper(cfg.patience);
  TrainResult result;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<int> order = train_idx;
    rng.shuffle(order);

    double loss_sum = 0.0;
    double last_lr = 0.0;
    for (int s0 = 0; s0 < samples_per_epoch; s0 += cfg.batch_size) {
      const int bsz = std::min(cfg.batch_size, samples_per_epoch - s0);
      double batch_loss = 0.0;
      for (int k = 0; k < bsz; ++k) {
        const int round = order[static_cast<std::size_t>(s0 + k) % order.size()];
        const int t = static_cast<int>(rng.range(1, ds.max_t(round)));
        Tape tape(TapeOptions{.recording = true, .train_mode = true, .check_finite = true});
        const Clip clip = ds.clip(round, t);
        std::optional<Tensor> fused;
        if (cfg.events_enabled) {
          const std::vector<EventLabel> events = ds.events_until(round, t);
          const std::vector<int> idx = clip_frame_indices(ds.mode(), t);
          fused = fused_for_clip(tape, fw, ds.vocab(), events, t, idx, ds.fps());
        }
        const Tensor logits = forward_classify(tape, w, layout, clip, fused, rng.next());
        const int target[1] = {ds.label(round)};
        const Tensor loss =
            tape.cross_entropy_with_logits(tape.reshape(logits, {1, 2}), target);
        batch_loss += loss.item();
        tape.backward(loss);
      }
      batch_loss /= bsz;
      if (!std::isfinite(batch_loss) || batch_loss > cfg.diverged_loss)
        throw DivergedLossError("epoch " + std::to_string(epoch) + ": batch loss " +
                                std::to_string(batch_loss));
      last_lr = lr_at(static_cast<int>(opt.step), sched);
      adamw_step(params, opt, sched, 1.0 / bsz);
      loss_sum += batch_loss * bsz;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / samples_per_epoch;
    stats.val_accuracy = val_accuracy(ds, w, fw, layout, cfg, val_idx);
    stats.lr = last_lr;
    result.history.push_back(stats);

    const bool stop = stopper.observe(stats.val_accuracy);
    if (stopper.best_epoch() == epoch)
      result.best = make_checkpoint(config_json, params, &opt, rng.save(),
                                    static_cast<std::uint64_t>(opt.step));
    if (stop) {
      result.stopped_early = true;
      break;
    }
  }

  result.best_epoch = stopper.best_epoch();
  result.best_val_accuracy = stopper.best_value();
  return result;
}

}  // namespace vroc
