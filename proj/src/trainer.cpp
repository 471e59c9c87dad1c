// Copyright 2026 The gmtl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gmtl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gmtl/errors.hpp"
#include "gmtl/losses.hpp"
#include "gmtl/metrics.hpp"

namespace gmtl {

DataDims DataDims::of(const Dataset& ds) {
  return {ds.config.ling_dim(), ds.config.acoustic_dim(), ds.config.phonemes, ds.config.mcc_dims};
}

namespace {

GeneratorConfig generator_config(const TrainConfig& cfg, const DataDims& dims) {
  GeneratorConfig g;
  g.noise_dim = cfg.uses_noise() ? cfg.noise_dim : 0;
  g.cond_dim = dims.cond_dim;
  g.acoustic_dim = dims.acoustic_dim;
  g.dense_layers = cfg.dense_layers;
  g.dense_width = cfg.dense_width;
  g.recurrent_layers = cfg.recurrent_layers;
  g.recurrent_hidden = cfg.recurrent_hidden;
  return g;
}

DiscriminatorConfig discriminator_config(const TrainConfig& cfg, const DataDims& dims) {
  DiscriminatorConfig d;
  d.window = cfg.window;
  d.acoustic_dim = dims.acoustic_dim;
  d.cond_dim = dims.cond_dim;
  d.conv1_channels = cfg.conv1_channels;
  d.conv2_channels = cfg.conv2_channels;
  d.fc_width = cfg.fc_width;
  d.lrelu_alpha = cfg.lrelu_alpha;
  d.head = cfg.mode == TrainMode::kGanPc ? HeadKind::kPhoneme : HeadKind::kBinary;
  d.num_classes = dims.num_classes;
  return d;
}

// Parameters and optimizer state with fresh values, no statistics.
TrainState blank_state(const TrainConfig& cfg, const DataDims& dims) {
  cfg.validate();
  TrainState s;
  s.config = cfg;
  s.dims = dims;
  Rng rg(cfg.seed, Stream::kInitGenerator);
  s.g = init_generator(generator_config(cfg, dims), rg);
  s.adam_g = AdamState::for_params(s.g.params(), cfg.adam);
  if (cfg.uses_discriminator()) {
    Rng rd(cfg.seed, Stream::kInitDiscriminator);
    s.d = init_discriminator(discriminator_config(cfg, dims), rd);
    for (BatchNorm* bn : {&s.d->bn1, &s.d->bn2}) {
      bn->momentum = cfg.bn_momentum;
      bn->epsilon = cfg.bn_epsilon;
    }
    s.adam_d = AdamState::for_params(s.d->params(), cfg.adam);
  }
  s.norm_mean = Tensor({dims.acoustic_dim}, 0.0);
  s.norm_std = Tensor({dims.acoustic_dim}, 1.0);
  return s;
}

void check_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite values in ") + what);
}

double finite_item(Var v, const char* what) {
  const double x = v.value().item();
  if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + what);
  return x;
}

Tensor stack_rows(const Tensor& a, const Tensor& b) {
  Shape s = a.shape();
  s[0] += b.dim(0);
  std::vector<double> data(a.storage());
  data.insert(data.end(), b.storage().begin(), b.storage().end());
  return Tensor(s, std::move(data));
}

Tensor noise(std::uint64_t seed, std::uint64_t step, std::uint64_t sub, const Shape& shape) {
  Rng r = Rng(seed, Stream::kNoise).substream(step).substream(sub);
  return rng_uniform(r, shape, -1.0, 1.0);
}

}  // namespace

std::pair<Tensor, Tensor> acoustic_stats(const Dataset& ds) {
  const std::size_t A = ds.config.acoustic_dim();
  Tensor mean({A}, 0.0), std({A}, 0.0);
  std::size_t n = 0;
  for (std::size_t i : ds.indices(Split::kTrain)) {
    const Tensor& a = ds.utterances[i].acoustic;
    for (std::size_t t = 0; t < a.dim(0); ++t)
      for (std::size_t d = 0; d < A; ++d) mean[d] += a.at(t, d);
    n += a.dim(0);
  }
  if (n == 0) throw ShapeError("training split is empty");
  for (auto& v : mean.data()) v /= static_cast<double>(n);
  for (std::size_t i : ds.indices(Split::kTrain)) {
    const Tensor& a = ds.utterances[i].acoustic;
    for (std::size_t t = 0; t < a.dim(0); ++t)
      for (std::size_t d = 0; d < A; ++d) std[d] += (a.at(t, d) - mean[d]) * (a.at(t, d) - mean[d]);
  }
  for (auto& v : std.data()) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < 1e-12) v = 1.0;
  }
  return {mean, std};
}

TrainState init_state(const TrainConfig& cfg, const Dataset& ds) {
  TrainState s = blank_state(cfg, DataDims::of(ds));
  if (cfg.normalize) std::tie(s.norm_mean, s.norm_std) = acoustic_stats(ds);
  return s;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kCkptMagic[4] = {'G', 'M', 'T', 'L'};

std::vector<std::pair<std::string, Tensor*>> mutable_tensors(TrainState& s) {
  std::vector<std::pair<std::string, Tensor*>> out;
  auto add_params = [&out](std::vector<Param*> ps) {
    for (Param* p : ps) out.emplace_back(p->name, &p->value);
  };
  auto add_adam = [&out](const std::string& prefix, std::vector<Param*> ps, AdamState& st) {
    for (std::size_t k = 0; k < ps.size(); ++k) out.emplace_back(prefix + ".m." + ps[k]->name, &st.m[k]);
    for (std::size_t k = 0; k < ps.size(); ++k) out.emplace_back(prefix + ".v." + ps[k]->name, &st.v[k]);
  };
  add_params(s.g.params());
  if (s.d) {
    add_params(s.d->params());
    for (auto& [name, t] : s.d->buffers()) out.emplace_back(name, t);
  }
  add_adam("adam.g", s.g.params(), s.adam_g);
  if (s.d) add_adam("adam.d", s.d->params(), *s.adam_d);
  out.emplace_back("norm.mean", &s.norm_mean);
  out.emplace_back("norm.std", &s.norm_std);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, const Tensor*>> checkpoint_tensors(const TrainState& s) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [n, t] : mutable_tensors(const_cast<TrainState&>(s))) out.emplace_back(n, t);
  return out;
}

std::vector<std::uint8_t> encode_checkpoint(const TrainState& s) {
  KeyValues kv = s.config.to_kv();
  kv["state.step"] = std::to_string(s.step);
  kv["state.adam_g_t"] = std::to_string(s.adam_g.t);
  if (s.adam_d) kv["state.adam_d_t"] = std::to_string(s.adam_d->t);
  kv["state.rng_seed"] = std::to_string(s.config.seed);
  kv["data.cond_dim"] = std::to_string(s.dims.cond_dim);
  kv["data.acoustic_dim"] = std::to_string(s.dims.acoustic_dim);
  kv["data.num_classes"] = std::to_string(s.dims.num_classes);
  kv["data.mcc_dims"] = std::to_string(s.dims.mcc_dims);

  const auto tensors = checkpoint_tensors(s);
  ByteWriter w;
  w.bytes(std::string_view(kCkptMagic, 4));
  w.u32(kCheckpointFormatVersion);
  w.text(format_key_values(kv));
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    w.text(name);
    w.u32(static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t->data()) w.f64(v);
  }
  auto& buf = w.buffer();
  const std::uint32_t crc = crc32(buf.data() + 8, buf.size() - 8);
  w.u32(crc);
  return std::move(buf);
}

TrainState decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCkptMagic, 4) != 0) {
    throw FormatError(FormatError::Kind::kVersionMismatch, "not a GMTL checkpoint (bad magic)");
  }
  ByteReader r(bytes.data(), bytes.size());
  r.set_context("header");
  r.bytes(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointFormatVersion) {
    throw FormatError(FormatError::Kind::kVersionMismatch, "unsupported GMTL version " + std::to_string(version) +
                                                               " (expected " +
                                                               std::to_string(kCheckpointFormatVersion) + ")");
  }
  // Verify the trailer before trusting any length field.
  if (bytes.size() < 12) throw FormatError(FormatError::Kind::kTruncated, "truncated checkpoint");
  const std::size_t payload_end = bytes.size() - 4;
  ByteReader trailer(bytes.data() + payload_end, 4);
  if (crc32(bytes.data() + 8, payload_end - 8) != trailer.u32()) {
    throw FormatError(FormatError::Kind::kChecksum, "GMTL checksum mismatch");
  }

  r.set_context("config block");
  KeyValues kv = parse_key_values(r.text());
  auto take = [&kv](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(FormatError::Kind::kMalformed, "checkpoint config lacks " + key);
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  const std::uint64_t step = parse_u64("state.step", take("state.step"));
  const std::uint64_t adam_g_t = parse_u64("state.adam_g_t", take("state.adam_g_t"));
  std::optional<std::uint64_t> adam_d_t;
  if (kv.count("state.adam_d_t")) adam_d_t = parse_u64("state.adam_d_t", take("state.adam_d_t"));
  take("state.rng_seed");
  DataDims dims;
  dims.cond_dim = parse_u64("data.cond_dim", take("data.cond_dim"));
  dims.acoustic_dim = parse_u64("data.acoustic_dim", take("data.acoustic_dim"));
  dims.num_classes = parse_u64("data.num_classes", take("data.num_classes"));
  dims.mcc_dims = parse_u64("data.mcc_dims", take("data.mcc_dims"));
  TrainState s = blank_state(TrainConfig::from_kv(kv), dims);
  s.step = step;
  s.adam_g.t = adam_g_t;
  if (s.adam_d.has_value() != adam_d_t.has_value()) {
    throw FormatError(FormatError::Kind::kMalformed, "checkpoint optimizer state does not match its mode");
  }
  if (s.adam_d) s.adam_d->t = *adam_d_t;

  auto expected = mutable_tensors(s);
  r.set_context("tensor count");
  const std::uint32_t count = r.u32();
  if (count != expected.size()) {
    throw FormatError(FormatError::Kind::kMalformed, "checkpoint holds " + std::to_string(count) +
                                                         " tensors, expected " + std::to_string(expected.size()));
  }
  for (auto& [name, t] : expected) {
    r.set_context("tensor " + name);
    const std::string got = r.text();
    if (got != name) throw FormatError(FormatError::Kind::kMalformed, "expected tensor " + name + ", found " + got);
    const std::uint32_t rank = r.u32();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != t->shape()) {
      throw FormatError(FormatError::Kind::kMalformed,
                        "tensor " + name + " has shape " + shape_str(shape) + ", expected " + shape_str(t->shape()));
    }
    r.f64_array(t->data().data(), t->size());
  }
  if (r.position() != payload_end) throw FormatError(FormatError::Kind::kMalformed, "unexpected bytes before trailer");
  return s;
}

void save_checkpoint(const TrainState& s, const std::filesystem::path& path) { write_file(path, encode_checkpoint(s)); }

TrainState load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

// ---------------------------------------------------------------------------
// Training

std::string log_csv_header() { return "step,mse,adv,d_loss,wall_ms,d_real,nan\n"; }

std::string format_log_row(const StepRecord& r) {
  return std::to_string(r.step) + "," + format_double(r.mse) + "," + format_double(r.adv) + "," +
         format_double(r.d_loss) + "," + format_double(r.wall_ms) + "," + format_double(r.d_real) + "," +
         (r.nan ? "1" : "0") + "\n";
}

Trainer::Trainer(const Dataset& ds, TrainState state)
    : ds_(&ds),
      state_(std::move(state)),
      g_batches_(ds, Split::kTrain, state_.config.batch_size, state_.config.window,
                 Rng(state_.config.seed, Stream::kBatchGenerator)) {
  if (!(DataDims::of(ds) == state_.dims)) throw ShapeError("dataset dimensions do not match the model");
  if (state_.d) {
    d_batches_.emplace(ds, Split::kTrain, state_.config.batch_size, state_.config.window,
                       Rng(state_.config.seed, Stream::kBatchDiscriminator));
  }
}

Tensor Trainer::normalize(const Tensor& a) const {
  Tensor out(a.shape());
  const std::size_t A = state_.dims.acoustic_dim;
  const double* src = a.data().data();
  double* dst = out.data().data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t d = i % A;
    dst[i] = (src[i] - state_.norm_mean[d]) / state_.norm_std[d];
  }
  return out;
}

void Trainer::discriminator_pass(std::uint64_t s, std::size_t j, StepRecord& rec) {
  const TrainConfig& cfg = state_.config;
  Discriminator& d = *state_.d;
  const Batch batch = d_batches_->batch(s * cfg.d_steps + j);
  const std::size_t B = cfg.batch_size;
  const Tensor real = normalize(batch.acoustic);

  Tensor fake;
  {
    Tape gt;
    std::optional<Var> z;
    if (state_.g.config.noise_dim > 0) {
      z = gt.constant(noise(cfg.seed, s, 1 + j, {B, cfg.window, state_.g.config.noise_dim}));
    }
    fake = generator_forward(gt, state_.g, z, gt.constant(batch.ling), false).value();
  }
  check_finite(fake, "generator output");

  Tape tape;
  Var x = tape.constant(stack_rows(real, fake));
  Var y = tape.constant(stack_rows(batch.center_ling, batch.center_ling));
  Var out = discriminator_forward(tape, d, x, y, true, true);
  check_finite(out.value(), "discriminator output");
  Var out_real = slice(out, 0, 0, B);
  Var out_fake = slice(out, 0, B, B);
  Var loss, real_term;
  if (cfg.mode == TrainMode::kGanPc) {
    Var labels = tape.constant(one_hot(batch.labels, state_.dims.num_classes));
    loss = loss_pc_discriminator(out_real, out_fake, labels, cfg.loss.prob_clamp);
    real_term = mean_cross_entropy(out_real, labels, cfg.loss.prob_clamp);
  } else {
    loss = loss_discriminator(out_real, out_fake, cfg.loss.prob_clamp);
    real_term = scale(mean(log(clamp(out_real, cfg.loss.prob_clamp, 1.0 - cfg.loss.prob_clamp))), -1.0);
  }
  rec.d_loss = finite_item(loss, "discriminator loss");
  rec.d_real = finite_item(real_term, "discriminator real term");
  auto params = d.params();
  for (Param* p : params) p->zero_grad();
  tape.backward(loss);
  adam_step(params, *state_.adam_d);
}

void Trainer::generator_pass(std::uint64_t s, StepRecord& rec) {
  const TrainConfig& cfg = state_.config;
  const Batch batch = g_batches_.batch(s);
  const std::size_t B = cfg.batch_size;
  const Tensor real = normalize(batch.acoustic);

  Tape tape;
  std::optional<Var> z;
  if (state_.g.config.noise_dim > 0) {
    z = tape.constant(noise(cfg.seed, s, 0, {B, cfg.window, state_.g.config.noise_dim}));
  }
  Var fake = generator_forward(tape, state_.g, z, tape.constant(batch.ling), true);
  check_finite(fake.value(), "generator output");
  Var x_real = tape.constant(real);
  Var recon = loss_mse(fake, x_real, cfg.loss.recon_norm);
  rec.mse = finite_item(recon, "reconstruction loss");

  Var loss;
  const bool adversarial = cfg.mode != TrainMode::kMse && cfg.loss.adv_weight != 0.0;
  if (!adversarial) {
    loss = cfg.mode == TrainMode::kMse || cfg.loss.recon_weight == 1.0 ? recon : scale(recon, cfg.loss.recon_weight);
  } else {
    Discriminator& d = *state_.d;
    Var both = concat({x_real, fake}, 0);
    Var yc = tape.constant(batch.center_ling);
    Var out = discriminator_forward(tape, d, both, concat({yc, yc}, 0), false, false);
    check_finite(out.value(), "discriminator output");
    Var out_fake = slice(out, 0, B, B);
    if (cfg.mode == TrainMode::kGanPc) {
      Var labels = tape.constant(one_hot(batch.labels, state_.dims.num_classes));
      loss = loss_pc_generator(fake, x_real, out_fake, labels, cfg.loss);
      rec.adv = -finite_item(mean_cross_entropy(out_fake, labels, cfg.loss.prob_clamp), "adversarial term");
    } else {
      loss = loss_generator_mtl(fake, x_real, out_fake, cfg.loss);
      rec.adv = finite_item(generator_adversarial_term(out_fake, cfg.loss), "adversarial term");
    }
  }
  finite_item(loss, "generator loss");
  auto params = state_.g.params();
  for (Param* p : params) p->zero_grad();
  tape.backward(loss);
  adam_step(params, state_.adam_g);
}

StepRecord Trainer::step() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t s = state_.step;
  StepRecord rec;
  rec.step = s + 1;
  if (state_.d) {
    for (std::size_t j = 0; j < state_.config.d_steps; ++j) discriminator_pass(s, j, rec);
  }
  generator_pass(s, rec);
  state_.step = s + 1;
  if (state_.config.log_wall_time) {
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return rec;
}

double Trainer::validation_mse() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i : ds_->indices(Split::kValid)) {
    const Utterance& u = ds_->utterances[i];
    const Tensor hyp = normalize(synthesize(state_, u.ling, state_.config.seed, i));
    const Tensor ref = normalize(u.acoustic);
    for (std::size_t k = 0; k < ref.size(); ++k) sum += (hyp[k] - ref[k]) * (hyp[k] - ref[k]);
    n += ref.size();
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// ---------------------------------------------------------------------------
// Synthesis

Tensor synthesize(const TrainState& s, const Tensor& ling, std::uint64_t seed, std::uint64_t noise_id) {
  if (ling.rank() != 2 || ling.dim(1) != s.dims.cond_dim) {
    throw ShapeError("synthesize: linguistic features " + shape_str(ling.shape()) + " do not match width " +
                     std::to_string(s.dims.cond_dim));
  }
  const std::size_t T = ling.dim(0), L = s.dims.cond_dim, A = s.dims.acoustic_dim;
  const std::size_t W = std::min(s.config.window, T);
  const std::size_t nd = s.g.config.noise_dim;
  std::vector<std::size_t> starts;
  for (std::size_t st = 0; st + W <= T; st += W) starts.push_back(st);
  if (starts.back() + W < T) starts.push_back(T - W);
  const std::size_t C = starts.size();

  Tensor z_all;
  if (nd > 0) {
    Rng r = Rng(seed, Stream::kSynthNoise).substream(noise_id);
    z_all = rng_uniform(r, {T, nd}, -1.0, 1.0);
  }
  Tensor y({C, W, L});
  Tensor z = nd > 0 ? Tensor({C, W, nd}) : Tensor();
  for (std::size_t c = 0; c < C; ++c) {
    std::memcpy(y.data().data() + c * W * L, ling.data().data() + starts[c] * L, W * L * sizeof(double));
    if (nd > 0) {
      std::memcpy(z.data().data() + c * W * nd, z_all.data().data() + starts[c] * nd, W * nd * sizeof(double));
    }
  }
  Tape tape;
  std::optional<Var> zv;
  if (nd > 0) zv = tape.constant(z);
  // Frozen forward: parameters are only read.
  Generator& g = const_cast<Generator&>(s.g);
  const Tensor out = generator_forward(tape, g, zv, tape.constant(y), false).value();

  Tensor frames({T, A});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < W; ++k) {
      const std::size_t t = starts[c] + k;
      for (std::size_t d = 0; d < A; ++d) {
        frames.at(t, d) = out[(c * W + k) * A + d] * s.norm_std[d] + s.norm_mean[d];
      }
    }
  }
  return frames;
}

Dataset synthesize_split(const TrainState& s, const Dataset& ds, Split split, std::uint64_t seed) {
  Dataset out;
  out.config = ds.config;
  out.extra = ds.extra;
  out.extra["variant"] = "acoustic-only";
  out.extra["source.split"] = split_name(split);
  for (std::size_t i : ds.indices(split)) {
    const Utterance& u = ds.utterances[i];
    Utterance h;
    h.ling = u.ling;
    h.labels = u.labels;
    h.acoustic = synthesize(s, u.ling, seed, i);
    out.utterances.push_back(std::move(h));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

std::vector<StepRecord> read_log(const std::filesystem::path& path, std::uint64_t upto) {
  std::vector<StepRecord> out;
  if (!std::filesystem::exists(path)) return out;
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw FormatError(FormatError::Kind::kMalformed, "malformed log row: " + line);
    StepRecord r;
    r.step = parse_u64("step", f[0]);
    if (r.step > upto) break;
    r.mse = parse_double("mse", f[1]);
    r.adv = parse_double("adv", f[2]);
    r.d_loss = parse_double("d_loss", f[3]);
    r.wall_ms = parse_double("wall_ms", f[4]);
    r.d_real = parse_double("d_real", f[5]);
    r.nan = f[6] == "1";
    if (r.nan) break;
    out.push_back(r);
  }
  return out;
}

std::vector<std::pair<std::uint64_t, double>> read_valid(const std::filesystem::path& path, std::uint64_t upto) {
  std::vector<std::pair<std::uint64_t, double>> out;
  if (!std::filesystem::exists(path)) return out;
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    const std::uint64_t step = parse_u64("step", line.substr(0, comma));
    if (step > upto) break;
    out.emplace_back(step, parse_double("valid_mse", line.substr(comma + 1)));
  }
  return out;
}

void write_logs(const std::filesystem::path& out, const std::vector<StepRecord>& log,
                const std::vector<std::pair<std::uint64_t, double>>& valid) {
  std::string text = log_csv_header();
  for (const auto& r : log) text += format_log_row(r);
  write_text_file(out / "log.csv", text);
  std::string vt = "step,valid_mse\n";
  for (const auto& [s, v] : valid) vt += std::to_string(s) + "," + format_double(v) + "\n";
  write_text_file(out / "valid.csv", vt);
}

// Keys that may differ between the checkpointed run and a resumed one.
bool resumable_key(const std::string& k) {
  return k == "train.steps" || k == "train.out" || k == "train.data" || k == "train.valid_every" ||
         k == "train.log_wall_time";
}

}  // namespace

TrainOutcome run_training(const TrainConfig& cfg, const Dataset& ds, const std::filesystem::path& out, bool resume) {
  cfg.validate();
  std::filesystem::create_directories(out);
  const auto ckpt_path = out / "checkpoint.gmtl";
  TrainOutcome result;
  std::vector<std::pair<std::uint64_t, double>> valid;
  if (resume) {
    TrainState loaded = load_checkpoint(ckpt_path);
    const KeyValues a = loaded.config.to_kv(), b = cfg.to_kv();
    for (const auto& [k, v] : b) {
      if (!resumable_key(k) && a.at(k) != v) {
        throw ConfigError("cannot resume: " + k + " is " + a.at(k) + " in the checkpoint but " + v + " in the config");
      }
    }
    if (!(loaded.dims == DataDims::of(ds))) throw ShapeError("cannot resume: dataset dimensions differ from checkpoint");
    loaded.config = cfg;
    result.state = std::move(loaded);
    result.log = read_log(out / "log.csv", result.state.step);
    valid = read_valid(out / "valid.csv", result.state.step);
    if (result.state.step >= cfg.steps) return result;
  } else {
    result.state = init_state(cfg, ds);
  }

  Trainer trainer(ds, std::move(result.state));
  while (trainer.state().step < cfg.steps) {
    StepRecord rec;
    try {
      rec = trainer.step();
    } catch (const NumericError& e) {
      rec.step = trainer.state().step + 1;
      rec.mse = rec.adv = rec.d_loss = rec.d_real = std::nan("");
      rec.nan = true;
      result.log.push_back(rec);
      result.nan_abort = true;
      result.abort_reason = e.what();
      write_logs(out, result.log, valid);
      // Hand back the last saved state, not the partially updated one.
      if (std::filesystem::exists(ckpt_path)) {
        result.state = load_checkpoint(ckpt_path);
      } else {
        result.state = std::move(trainer.state());
      }
      return result;
    }
    result.log.push_back(rec);
    const std::uint64_t s = trainer.state().step;
    if (s % cfg.valid_every == 0 || s == cfg.steps) {
      valid.emplace_back(s, trainer.validation_mse());
      save_checkpoint(trainer.state(), ckpt_path);
      write_logs(out, result.log, valid);
    }
  }
  result.state = std::move(trainer.state());
  return result;
}

}  // namespace gmtl
