#include "kinnet/training.hpp"

#include "kinnet/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace kinnet {

using nn::Tape;
using nn::Tensor;
using nn::Var;

const char* train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kAuto: return "auto";
    case TrainMode::kCycle: return "cycle";
    case TrainMode::kAdvCycle: return "adv-cycle";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "auto") return TrainMode::kAuto;
  if (name == "cycle") return TrainMode::kCycle;
  if (name == "adv-cycle") return TrainMode::kAdvCycle;
  throw Error("unknown training mode '" + name + "' (expected auto, cycle or adv-cycle)");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"mode", train_mode_name(mode)},
          {"generator", generator_kind_name(generator)},
          {"model", model_config_json(model)},
          {"discriminator", discriminator.to_json()},
          {"beta", weights.beta},
          {"alpha", weights.alpha},
          {"lambda", weights.lambda},
          {"omega", weights.omega},
          {"non_saturating", non_saturating},
          {"batch", batch},
          {"window", window},
          {"lr", lr},
          {"clip_norm", clip_norm},
          {"balance", balance},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.mode = parse_train_mode(j.at("mode"));
  c.generator = parse_generator_kind(j.at("generator"));
  c.model = config_from_manifest(j.at("model"));
  c.discriminator = DiscriminatorConfig::from_json(j.at("discriminator"));
  c.weights = {j.at("beta"), j.at("alpha"), j.at("lambda"), j.at("omega")};
  c.non_saturating = j.at("non_saturating");
  c.batch = j.at("batch");
  c.window = j.at("window");
  c.lr = j.at("lr");
  c.clip_norm = j.at("clip_norm");
  c.balance = j.at("balance");
  c.seed = j.at("seed");
  return c;
}

std::string metric_csv_row(const StepMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", m.step, m.cycle,
                m.r_gen, m.r_disc, m.twist, m.smooth, m.r_a_mean, m.r_b_mean);
  return buf;
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (!is) {
    throw FormatError("corrupt random generator state");
  }
  return rng;
}

struct Trainer::Pass {
  std::vector<Var> inputs;
  SequenceOutput to_b;
  SequenceOutput to_a;
  std::vector<const Skeleton*> targets_a;
  std::vector<const Skeleton*> targets_b;
  std::vector<double> cross;  // 1 where B != A
  Var r_b;                    // [B] realism of x̂^B (adversarial mode)
  Var loss;
  StepMetrics metrics;
};

Trainer::Trainer(const std::vector<MotionClip>& clips, TrainConfig config)
    : clips_(clips),
      config_(config),
      gen_opt_({config.lr}),
      disc_opt_({config.lr}),
      rng_(derive_rng(config.seed, 7)) {
  if (clips_.empty()) {
    throw Error("training set is empty");
  }
  if (config_.batch < 1) {
    throw Error("batch size must be positive");
  }
  if (config_.window < 2) {
    throw Error("training window must have at least 2 frames");
  }
  std::vector<const MotionClip*> all;
  for (const MotionClip& c : clips_) {
    c.validate();
    if (c.length() < static_cast<std::size_t>(config_.window)) {
      throw Error("clip '" + c.info.motion + "' is shorter than the training window");
    }
    all.push_back(&c);
    int found = -1;
    for (std::size_t s = 0; s < skeletons_.size(); ++s) {
      if (skeletons_[s].name() == c.skeleton.name()) found = static_cast<int>(s);
    }
    if (found < 0) {
      found = static_cast<int>(skeletons_.size());
      skeletons_.push_back(c.skeleton);
      clips_of_skeleton_.emplace_back();
    }
    clip_skeleton_.push_back(found);
    clips_of_skeleton_[found].push_back(clip_skeleton_.size() - 1);
  }
  for (const Skeleton& s : skeletons_) normalized_.push_back(normalized_skeleton(s));
  if (config_.mode == TrainMode::kAdvCycle) {
    if (skeletons_.size() < 2) {
      throw Error("adversarial training needs at least 2 characters, got " +
                  std::to_string(skeletons_.size()));
    }
    if (config_.window - 1 < kMinDiscriminatorLength) {
      throw Error("adversarial training needs a window of at least " +
                  std::to_string(kMinDiscriminatorLength + 1) + " frames");
    }
  }
  if (config_.generator != GeneratorKind::kKinematic) {
    config_.weights.lambda = 0.0;  // no rotations to constrain
  }
  config_.model.joints = static_cast<int>(clips_[0].skeleton.size());
  config_.discriminator.joints = config_.model.joints;
  Rng init = derive_rng(config_.seed, 3);
  generator_ =
      make_generator(config_.generator, config_.model, FeatureNormalizer::fit(all), init);
  if (config_.mode == TrainMode::kAdvCycle) {
    Rng dinit = derive_rng(config_.seed, 5);
    discriminator_ = std::make_unique<Discriminator>(config_.discriminator, dinit);
  }
}

Batch Trainer::sample_batch() {
  Batch b;
  const auto window = static_cast<std::size_t>(config_.window);
  for (int i = 0; i < config_.batch; ++i) {
    const std::size_t c = uniform_index(rng_, clips_.size());
    b.clips.push_back(&clips_[c]);
    b.begin.push_back(uniform_index(rng_, clips_[c].length() - window + 1));
    b.target.push_back(config_.mode == TrainMode::kAuto
                           ? clip_skeleton_[c]
                           : static_cast<int>(uniform_index(rng_, skeletons_.size())));
  }
  return b;
}

namespace {

double batch_mean(Var v) {
  const Tensor& t = v.value();
  double s = 0.0;
  for (double x : t.values()) s += x;
  return s / static_cast<double>(t.size());
}

void require_finite(double value, const char* term, long step) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string("non-finite ") + term + " loss at step " +
                       std::to_string(step));
  }
}

std::vector<Var> frames_of(const SequenceOutput& out) {
  std::vector<Var> v;
  for (const FrameOutput& f : out.frames) v.push_back(f.frame);
  return v;
}

}  // namespace

Trainer::Pass Trainer::forward(Tape& tape, const Batch& batch) const {
  const int rows = static_cast<int>(batch.clips.size());
  if (rows == 0 || batch.begin.size() != batch.clips.size() ||
      batch.target.size() != batch.clips.size()) {
    throw Error("malformed batch");
  }
  Pass p;
  p.cross.assign(rows, 0.0);
  for (int b = 0; b < rows; ++b) {
    const int a = clip_skeleton_[batch.clips[b] - clips_.data()];
    p.targets_a.push_back(&normalized_[a]);
    p.targets_b.push_back(&normalized_[batch.target[b]]);
    p.cross[b] = batch.target[b] == a ? 0.0 : 1.0;
  }
  for (Tensor& t : batch_features(batch.clips, batch.begin,
                                  static_cast<std::size_t>(config_.window),
                                  generator_->normalizer())) {
    p.inputs.push_back(tape.constant(std::move(t)));
  }
  const LossWeights& w = config_.weights;
  const bool cyclic = config_.mode != TrainMode::kAuto;
  const Tensor same_mask = [&] {
    Tensor m({rows});
    for (int b = 0; b < rows; ++b) m[b] = 1.0 - p.cross[b];
    return m;
  }();

  p.to_b = generator_->run(tape, p.inputs, p.targets_b);
  const std::vector<Var> x_b = frames_of(p.to_b);

  // R: square loss where B = A, adversarial where B != A.
  Var r = nn::mul(sequence_square_error(x_b, p.inputs), tape.constant(same_mask));
  if (config_.mode == TrainMode::kAdvCycle) {
    std::vector<Var> poses, vels;
    for (const FrameOutput& f : p.to_b.frames) {
      poses.push_back(f.pose);
      vels.push_back(f.velocity);
    }
    p.r_b = (*discriminator_)(tape, poses, vels,
                              tape.constant(skeleton_features(p.targets_b)));
    const Var adv = config_.non_saturating ? neg_log(p.r_b) : log_one_minus(p.r_b);
    Tensor cross_mask({rows});
    for (int b = 0; b < rows; ++b) cross_mask[b] = p.cross[b];
    r = nn::add(r, nn::mul(nn::scale(adv, w.beta), tape.constant(std::move(cross_mask))));
  }

  Var c, j, s;
  if (cyclic) {
    p.to_a = generator_->run(tape, x_b, p.targets_a);
    c = sequence_square_error(frames_of(p.to_a), p.inputs);
    std::vector<Var> vb, va;
    for (const FrameOutput& f : p.to_b.frames) vb.push_back(f.velocity);
    for (const FrameOutput& f : p.to_a.frames) va.push_back(f.velocity);
    s = nn::add(smoothing_penalty(vb), smoothing_penalty(va));
  }
  if (generator_->has_rotations() && w.lambda != 0.0) {
    std::vector<Var> qb;
    for (const FrameOutput& f : p.to_b.frames) qb.push_back(f.quats);
    j = twist_penalty(qb, w.alpha);
    if (cyclic) {
      std::vector<Var> qa;
      for (const FrameOutput& f : p.to_a.frames) qa.push_back(f.quats);
      j = nn::add(j, twist_penalty(qa, w.alpha));
    }
  }

  Var total = r;
  if (c.id >= 0) total = nn::add(total, c);
  if (j.id >= 0) total = nn::add(total, nn::scale(j, w.lambda));
  if (s.id >= 0) total = nn::add(total, nn::scale(s, w.omega));
  p.loss = nn::mean(total);

  StepMetrics& m = p.metrics;
  m.step = step_;
  m.cycle = c.id >= 0 ? batch_mean(c) : 0.0;
  m.r_gen = batch_mean(r);
  m.twist = j.id >= 0 ? batch_mean(j) : 0.0;
  m.smooth = s.id >= 0 ? batch_mean(s) : 0.0;
  m.total = p.loss.value().item();
  require_finite(m.cycle, "cycle", step_);
  require_finite(m.r_gen, "adversarial/reconstruction", step_);
  require_finite(m.twist, "twist", step_);
  require_finite(m.smooth, "smoothing", step_);
  require_finite(m.total, "total", step_);
  if (p.r_b.id >= 0) {
    double sum = 0.0, n = 0.0;
    for (int b = 0; b < rows; ++b) {
      if (p.cross[b] > 0.0) {
        sum += p.r_b.value()[b];
        n += 1.0;
      }
    }
    m.r_b_mean = n > 0.0 ? sum / n : 0.0;
  }
  return p;
}

StepMetrics Trainer::evaluate(const Batch& batch) const {
  Tape tape;
  tape.set_grad_enabled(false);
  return forward(tape, batch).metrics;
}

void Trainer::discriminator_step(const Batch& batch, const Pass& pass, StepMetrics& m) {
  std::vector<int> rows;
  for (std::size_t b = 0; b < pass.cross.size(); ++b) {
    if (pass.cross[b] > 0.0) rows.push_back(static_cast<int>(b));
  }
  if (rows.empty()) return;
  const int k = static_cast<int>(rows.size());
  const int n3 = 3 * config_.model.joints;
  const auto window = static_cast<std::size_t>(config_.window);

  // Fakes: x̂^B detached from the generator.
  std::vector<Tensor> fake_pose(window, Tensor({k, n3})), fake_vel(window, Tensor({k, 4}));
  for (std::size_t t = 0; t < window; ++t) {
    const Tensor& pose = pass.to_b.frames[t].pose.value();
    const Tensor& vel = pass.to_b.frames[t].velocity.value();
    for (int i = 0; i < k; ++i) {
      std::copy_n(pose.data() + static_cast<std::size_t>(rows[i]) * n3, n3,
                  fake_pose[t].data() + static_cast<std::size_t>(i) * n3);
      std::copy_n(vel.data() + static_cast<std::size_t>(rows[i]) * 4, 4,
                  fake_vel[t].data() + static_cast<std::size_t>(i) * 4);
    }
  }
  // Reals: independent windows performed by each row's target skeleton.
  std::vector<const MotionClip*> real_clips;
  std::vector<std::size_t> real_begin;
  std::vector<const Skeleton*> skel;
  for (int i = 0; i < k; ++i) {
    const int target = batch.target[rows[i]];
    const auto& pool = clips_of_skeleton_[target];
    const MotionClip& clip = clips_[pool[uniform_index(rng_, pool.size())]];
    real_clips.push_back(&clip);
    real_begin.push_back(uniform_index(rng_, clip.length() - window + 1));
    skel.push_back(&normalized_[target]);
  }
  const auto real = batch_features(real_clips, real_begin, window, generator_->normalizer());

  Tape tape(true, &rng_);
  const Var sk = tape.constant(skeleton_features(skel));
  std::vector<Var> rp, rv, fp, fv;
  for (std::size_t t = 0; t < window; ++t) {
    const Var x = tape.constant(real[t]);
    rp.push_back(nn::slice(x, 0, n3));
    rv.push_back(nn::slice(x, n3, n3 + 4));
    fp.push_back(tape.constant(fake_pose[t]));
    fv.push_back(tape.constant(fake_vel[t]));
  }
  const Var r_real = (*discriminator_)(tape, rp, rv, sk);
  const Var r_fake = (*discriminator_)(tape, fp, fv, sk);
  const Var objective = nn::add(nn::scale(neg_log(r_real), -1.0), log_one_minus(r_fake));
  m.r_a_mean = batch_mean(r_real);
  m.r_disc = batch_mean(objective);
  require_finite(m.r_disc, "discriminator", step_);

  const double balance_r = forced_r_b_ ? *forced_r_b_ : m.r_b_mean;
  if (balance_r < config_.balance) return;
  discriminator_->params().zero_grad();
  tape.backward(nn::scale(nn::mean(objective), -1.0));
  nn::clip_global_norm(discriminator_->params(), config_.clip_norm);
  disc_opt_.step(discriminator_->params());
  m.disc_updated = true;
}

StepMetrics Trainer::train_step(const Batch& batch) {
  Tape tape(true, &rng_);
  Pass pass = forward(tape, batch);
  generator_->params().zero_grad();
  tape.backward(pass.loss);
  nn::clip_global_norm(generator_->params(), config_.clip_norm);
  gen_opt_.step(generator_->params());
  if (discriminator_) {
    discriminator_step(batch, pass, pass.metrics);
  }
  ++step_;
  return pass.metrics;
}

void Trainer::run(long steps, std::ostream* metrics, const std::filesystem::path* checkpoint,
                  long checkpoint_every,
                  const std::function<void(const StepMetrics&)>& on_step) {
  if (metrics && metrics->tellp() == std::streampos(0)) {
    *metrics << kMetricCsvHeader << '\n';
  }
  while (step_ < steps) {
    const StepMetrics m = train_step();
    if (metrics) *metrics << metric_csv_row(m) << '\n';
    if (on_step) on_step(m);
    if (checkpoint && checkpoint_every > 0 && step_ % checkpoint_every == 0) {
      if (metrics) metrics->flush();
      save(*checkpoint);
    }
  }
  if (metrics) metrics->flush();
}

nn::Checkpoint Trainer::checkpoint() const {
  nn::Checkpoint ckpt;
  store_generator(ckpt, *generator_);
  ckpt.manifest["trainer"] = {
      {"config", config_.to_json()}, {"step", step_}, {"rng", rng_state(rng_)}};
  nn::store_optimizer(ckpt, "generator", gen_opt_);
  if (discriminator_) {
    nn::store_parameters(ckpt, discriminator_->params(), "discriminator/");
    nn::store_optimizer(ckpt, "discriminator", disc_opt_);
  }
  return ckpt;
}

void Trainer::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, checkpoint());
}

void Trainer::resume(const nn::Checkpoint& ckpt) {
  if (!ckpt.manifest.contains("trainer")) {
    throw FormatError("checkpoint carries no training state");
  }
  const auto& t = ckpt.manifest["trainer"];
  nn::load_parameters(ckpt, generator_->params(), "generator/");
  generator_->set_normalizer(
      FeatureNormalizer::from_json(ckpt.manifest.at("generator").at("normalizer")));
  nn::load_optimizer(ckpt, "generator", gen_opt_);
  if (discriminator_) {
    nn::load_parameters(ckpt, discriminator_->params(), "discriminator/");
    nn::load_optimizer(ckpt, "discriminator", disc_opt_);
  }
  step_ = t.at("step").get<long>();
  rng_ = rng_from_state(t.at("rng").get<std::string>());
}

}  // namespace kinnet
