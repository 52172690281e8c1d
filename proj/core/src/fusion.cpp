#include "vroc/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "vroc/rng.hpp"

namespace vroc {

Team team_from_str(const std::string& s) {
  if (s == "ATK") return Team::attacker;
  if (s == "DEF") return Team::defender;
  throw UnknownVocabError("unknown team '" + s + "'");
}

namespace {

int id_in(const std::vector<std::string>& vocab, const std::string& name, const char* what) {
  for (std::size_t i = 0; i < vocab.size(); ++i)
    if (vocab[i] == name) return static_cast<int>(i) + 1;
  throw UnknownVocabError(std::string("unknown ") + what + " '" + name + "'");
}

}  // namespace

int EventVocab::agent_id(const std::string& name) const { return id_in(agents, name, "agent"); }
int EventVocab::area_id(const std::string& name) const { return id_in(areas, name, "area"); }

int EventVocab::kind_id(const std::string& kind) {
  for (int i = 0; i < 3; ++i)
    if (kind == kEventKinds[i]) return i + 1;
  throw UnknownVocabError("unknown event kind '" + kind + "'");
}

FusionWeights FusionWeights::init(int d_e, int d_model, int n_agents, int n_areas,
                                  std::uint64_t seed) {
  if (d_e < 1 || d_model < 1 || n_agents < 1 || n_areas < 1)
    throw ConfigError("fusion: non-positive dimension");
  Rng rng(seed);
  constexpr double kStd = 0.02;
  FusionWeights w;
  w.d_e = d_e;
  w.d_model = d_model;
  auto table = [&](int vocab_rows) {
    Tensor t = Tensor::randn({vocab_rows + 1, d_e}, rng, kStd);
    // Row 0 is padding: never looked up, kept zero.
    auto d = t.mutable_data();
    for (int j = 0; j < d_e; ++j) d[static_cast<std::size_t>(j)] = 0.0;
    return t;
  };
  w.team_table = table(2);
  w.agent_table = table(n_agents);
  w.area_table = table(n_areas);
  w.kind_table = table(3);
  w.proj = Tensor::randn({d_e, d_model}, rng, kStd);
  w.proj_bias = Tensor::zeros({d_model});
  return w;
}

std::vector<ParamRef> FusionWeights::params() {
  return {
      ParamRef{"fusion.team_table", team_table, true, 1},
      ParamRef{"fusion.agent_table", agent_table, true, 1},
      ParamRef{"fusion.area_table", area_table, true, 1},
      ParamRef{"fusion.kind_table", kind_table, true, 1},
      ParamRef{"fusion.proj", proj, true, 0},
      ParamRef{"fusion.proj_bias", proj_bias, false, 0},
  };
}

void FusionWeights::set_requires_grad(bool rg) {
  for (ParamRef& p : params()) p.tensor.set_requires_grad(rg);
}

Tensor rasterize(Tape& tape, const FusionWeights& w, const EventVocab& vocab,
                 std::span<const EventLabel> events, double duration_s, double fps) {
  if (duration_s <= 0 || fps <= 0)
    throw ConfigError("rasterize: non-positive duration or fps");
  const int f_total = std::max(1, static_cast<int>(std::llround(duration_s * fps)));
  std::vector<std::vector<int>> team_ids(static_cast<std::size_t>(f_total));
  std::vector<std::vector<int>> agent_ids(static_cast<std::size_t>(f_total));
  std::vector<std::vector<int>> area_ids(static_cast<std::size_t>(f_total));
  std::vector<std::vector<int>> kind_ids(static_cast<std::size_t>(f_total));
  for (const EventLabel& e : events) {
    int f = static_cast<int>(std::llround(e.t * fps));
    f = std::clamp(f, 0, f_total - 1);
    const auto fi = static_cast<std::size_t>(f);
    team_ids[fi].push_back(vocab.team_id(e.team));
    agent_ids[fi].push_back(vocab.agent_id(e.agent));
    area_ids[fi].push_back(vocab.area_id(e.area));
    kind_ids[fi].push_back(EventVocab::kind_id(e.kind));
  }
  Tensor grid = tape.embedding_bag_sum(w.team_table, team_ids);
  grid = tape.add(grid, tape.embedding_bag_sum(w.agent_table, agent_ids));
  grid = tape.add(grid, tape.embedding_bag_sum(w.area_table, area_ids));
  grid = tape.add(grid, tape.embedding_bag_sum(w.kind_table, kind_ids));
  return grid;
}

Tensor pool_chunks(Tape& tape, const Tensor& grid) { return tape.chunk_mean(grid, 8); }

Tensor project_and_attach(Tape& tape, const FusionWeights& w, const Tensor& pooled,
                          std::span<const int> sampled_frames) {
  if (pooled.ndim() != 2 || pooled.dim(1) != w.d_e)
    throw ShapeMismatchError("project_and_attach: pooled must be [*, " + std::to_string(w.d_e) +
                             "], got " + shape_str(pooled.shape()));
  const int chunks = pooled.dim(0);
  std::vector<int> chunk_idx;
  chunk_idx.reserve(sampled_frames.size());
  for (int f : sampled_frames) {
    const int c = f / 8;
    if (f < 0 || c >= chunks)
      throw IndexOutOfRangeError("project_and_attach: frame " + std::to_string(f) +
                                 " outside pooled grid of " + std::to_string(chunks) +
                                 " chunks");
    chunk_idx.push_back(c);
  }
  Tensor rows = tape.gather_rows(pooled, chunk_idx);
  Tensor fused = tape.add_rows(tape.matmul(rows, w.proj), w.proj_bias);
  // Chunks with no events pooled to an exactly-zero row; force their
  // fused rows (bias included) to zero so absent and empty event
  // streams are indistinguishable downstream.
  std::vector<double> gate(chunk_idx.size(), 0.0);
  const auto rv = rows.data();
  for (std::size_t i = 0; i < chunk_idx.size(); ++i) {
    const double* r = rv.data() + i * static_cast<std::size_t>(w.d_e);
    for (int j = 0; j < w.d_e; ++j)
      if (r[j] != 0.0) {
        gate[i] = 1.0;
        break;
      }
  }
  return tape.scale_rows(fused, gate);
}

void write_events_jsonl(const std::string& path, std::span<const RoundEvents> rounds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  for (const RoundEvents& r : rounds) {
    for (const EventLabel& e : r.events) {
      nlohmann::ordered_json j;
      j["round"] = r.round_id;
      j["t"] = e.t;
      j["team"] = team_str(e.team);
      j["agent"] = e.agent;
      j["area"] = e.area;
      j["kind"] = e.kind;
      out << j.dump() << "\n";
    }
  }
  if (!out) throw IoError("write failure on " + path);
}

std::vector<RoundEvents> read_events_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::vector<RoundEvents> rounds;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    EventLabel e;
    e.t = j.at("t").get<double>();
    e.team = team_from_str(j.at("team").get<std::string>());
    e.agent = j.at("agent").get<std::string>();
    e.area = j.at("area").get<std::string>();
    e.kind = j.at("kind").get<std::string>();
    const std::string rid = j.at("round").get<std::string>();
    if (rounds.empty() || rounds.back().round_id != rid) {
      // Events are written grouped by round; tolerate interleaving by
      // searching existing groups.
      auto it = std::find_if(rounds.begin(), rounds.end(),
                             [&](const RoundEvents& r) { return r.round_id == rid; });
      if (it == rounds.end()) {
        rounds.push_back(RoundEvents{rid, {}});
        rounds.back().events.push_back(std::move(e));
        continue;
      }
      it->events.push_back(std::move(e));
      continue;
    }
    rounds.back().events.push_back(std::move(e));
  }
  for (RoundEvents& r : rounds)
    std::stable_sort(r.events.begin(), r.events.end(),
                     [](const EventLabel& a, const EventLabel& b) { return a.t < b.t; });
  return rounds;
}

}  // namespace vroc
