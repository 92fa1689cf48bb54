// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include "gradcheck.hpp"

#include "kinnet/baselines.hpp"
#include "kinnet/clip_io.hpp"
#include "kinnet/dataset.hpp"
#include "kinnet/evaluation.hpp"
#include "kinnet/fk.hpp"
#include "kinnet/losses.hpp"
#include "kinnet/model.hpp"
#include "kinnet/nn/checkpoint.hpp"
#include "kinnet/nn/layers.hpp"
#include "kinnet/synthetic.hpp"
#include "kinnet/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>

using namespace kinnet;
using nn::Tape;
using nn::Tensor;
using nn::Var;
using testing::gradcheck;
using testing::random_tensor;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("criterion %2d %s: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", name.c_str(),
              o.detail.c_str());
  std::fflush(stdout);
  failures += o.pass ? 0 : 1;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Mat3 rodrigues(const Vec3& axis, double degrees) {
  const double t = degrees * M_PI / 180.0;
  Mat3 k;
  k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
  return Mat3::Identity() + std::sin(t) * k + (1.0 - std::cos(t)) * k * k;
}

Quaternion random_unit(Rng& rng) {
  Vec4 v(gaussian(rng), gaussian(rng), gaussian(rng), gaussian(rng));
  return Quaternion::from_vec(v.normalized());
}

Outcome rotation_algebra() {
  const auto t0 = Clock::now();
  Rng rng(1);
  double ortho = 0.0, det = 0.0, oracle = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 m = quat_to_rotmat(random_unit(rng));
    ortho = std::max(ortho, (m * m.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff());
    det = std::max(det, std::abs(m.determinant() - 1.0));
    const Vec3 axis = Vec3(gaussian(rng), gaussian(rng), gaussian(rng)).normalized();
    const double deg = uniform(rng, -180.0, 180.0);
    // The matrix layout turns by -deg about the quaternion's axis.
    const Mat3 q = quat_to_rotmat(axis_angle_quat(axis, deg));
    oracle = std::max(oracle, (q - rodrigues(axis, -deg)).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {ortho <= 1e-8 && det <= 1e-8 && oracle <= 1e-8 && secs < 1.0,
          fmt("orthonormality %.2g, determinant %.2g, axis-angle %.2g", ortho, det, oracle) +
              fmt(", %.3f s", secs)};
}

Tensor away_from_zero(Rng& rng, std::vector<int> shape) {
  Tensor t = random_tensor(rng, std::move(shape));
  for (double& v : t.values()) {
    if (std::abs(v) < 0.05) v += v < 0 ? -0.1 : 0.1;
  }
  return t;
}

Tensor positive(Rng& rng, std::vector<int> shape) {
  Tensor t = random_tensor(rng, std::move(shape));
  for (double& v : t.values()) v = 0.5 + std::abs(v);
  return t;
}

Tensor unit_quaternions(Rng& rng, int batch, int joints) {
  Tensor t({batch, 4 * joints});
  for (int k = 0; k < batch * joints; ++k) {
    const Vec4 q = random_unit(rng).vec();
    for (int c = 0; c < 4; ++c) t[4 * k + c] = q[c];
  }
  return t;
}

Outcome differentiability() {
  const auto t0 = Clock::now();
  Rng rng(2);
  std::map<std::string, double> worst;
  auto check = [&](const std::string& name, const testing::Builder& b,
                   std::vector<Tensor> in, double h = 1e-5) {
    worst[name] = std::max(worst[name], gradcheck(b, std::move(in), rng, h));
  };
  const Skeleton two("two", {{"Root", -1, Vec3(0, 1, 0)}, {"Spine", 0, Vec3(0.2, 0.5, 0.1)}});
  const Skeleton full = normalized_skeleton(make_character("c", random_bone_scales(rng)));
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_tensor(rng, {2, 3});
    const auto b = random_tensor(rng, {2, 3});
    const auto kinked = away_from_zero(rng, {2, 3});
    const auto pos = positive(rng, {2, 3});
    check("matmul", [](Tape&, auto& v) { return nn::matmul(v[0], v[1]); },
          {a, random_tensor(rng, {3, 2})});
    check("affine", [](Tape&, auto& v) { return nn::affine(v[0], v[1], v[2]); },
          {a, random_tensor(rng, {3, 2}), random_tensor(rng, {2})});
    check("add", [](Tape&, auto& v) { return nn::add(v[0], v[1]); }, {a, b});
    check("sub", [](Tape&, auto& v) { return nn::sub(v[0], v[1]); }, {a, b});
    check("mul", [](Tape&, auto& v) { return nn::mul(v[0], v[1]); }, {a, b});
    check("add_row", [](Tape&, auto& v) { return nn::add_row(v[0], v[1]); },
          {a, random_tensor(rng, {3})});
    check("scale", [](Tape&, auto& v) { return nn::scale(v[0], 1.7); }, {a});
    check("add_scalar", [](Tape&, auto& v) { return nn::add_scalar(v[0], 0.3); }, {a});
    check("tanh", [](Tape&, auto& v) { return nn::tanh(v[0]); }, {a});
    check("sigmoid", [](Tape&, auto& v) { return nn::sigmoid(v[0]); }, {a});
    check("leaky_relu", [](Tape&, auto& v) { return nn::leaky_relu(v[0]); }, {kinked});
    check("relu", [](Tape&, auto& v) { return nn::relu(v[0]); }, {kinked});
    check("abs", [](Tape&, auto& v) { return nn::abs(v[0]); }, {kinked});
    check("square", [](Tape&, auto& v) { return nn::square(v[0]); }, {a});
    check("sqrt", [](Tape&, auto& v) { return nn::sqrt(v[0]); }, {pos});
    check("log", [](Tape&, auto& v) { return nn::log(v[0]); }, {pos});
    check("clamp", [](Tape&, auto& v) { return nn::clamp(v[0], -0.02, 0.03); }, {kinked});
    check("concat", [](Tape&, auto& v) { return nn::concat({v[0], v[1]}); }, {a, b});
    check("slice", [](Tape&, auto& v) { return nn::slice(v[0], 1, 3); }, {a});
    check("reshape", [](Tape&, auto& v) { return nn::reshape(v[0], {3, 2}); }, {a});
    check("stack_time", [](Tape&, auto& v) { return nn::stack_time({v[0], v[1]}); }, {a, b});
    check("sum", [](Tape&, auto& v) { return nn::sum(v[0]); }, {a});
    check("mean", [](Tape&, auto& v) { return nn::mean(v[0]); }, {a});
    check("sum_last", [](Tape&, auto& v) { return nn::sum_last(v[0]); }, {a});
    check("mean_last", [](Tape&, auto& v) { return nn::mean_last(v[0]); }, {a});
    const auto x = random_tensor(rng, {2, 2, 7});
    const auto w = random_tensor(rng, {3, 2, 4});
    const auto bias = random_tensor(rng, {3});
    check("conv1d same", [](Tape&, auto& v) {
      return nn::conv1d(v[0], v[1], v[2], 2, nn::Padding::kSame);
    }, {x, w, bias});
    check("conv1d valid", [](Tape&, auto& v) {
      return nn::conv1d(v[0], v[1], v[2], 1, nn::Padding::kValid);
    }, {x, w, bias});
    check("instance_norm", [](Tape&, auto& v) { return nn::instance_norm_1d(v[0]); }, {x});
    check("channel_affine", [](Tape&, auto& v) { return nn::channel_affine(v[0], v[1], v[2]); },
          {x, random_tensor(rng, {2}), random_tensor(rng, {2})});
    for (nn::GruVariant variant :
         {nn::GruVariant::kResetBeforeMatmul, nn::GruVariant::kResetAfterMatmul}) {
      check("gru_step x5", [variant](Tape&, const std::vector<Var>& v) {
        Var h = v[1];
        for (int t = 0; t < 5; ++t) h = nn::gru_cell(v[0], h, v[2], v[3], v[4], v[5], variant);
        return h;
      }, {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 2}), random_tensor(rng, {3, 6}),
          random_tensor(rng, {2, 6}), random_tensor(rng, {6}), random_tensor(rng, {6})});
    }
    check("quat_normalize", [](Tape&, auto& v) { return nn::normalize_quaternions(v[0]); },
          {random_tensor(rng, {2, 8})});
    Tensor q({1, 8});
    for (int k = 0; k < 2; ++k) {
      const Vec4 e = euler_xyz(uniform(rng, -60, 60), uniform(rng, -70, 70),
                               uniform(rng, -60, 60)).vec();
      for (int c = 0; c < 4; ++c) q[4 * k + c] = e[c];
    }
    check("quat_twist_angle_y", [](Tape&, auto& v) { return nn::twist_angles(v[0]); }, {q},
          1e-6);
    const std::vector<const Skeleton*> s2{&two};
    check("fk 2 joints", [&](Tape&, auto& v) { return nn::forward_kinematics(v[0], s2); },
          {unit_quaternions(rng, 1, 2)});
    const std::vector<const Skeleton*> s22{&full};
    check("fk 22 joints", [&](Tape&, auto& v) { return nn::forward_kinematics(v[0], s22); },
          {unit_quaternions(rng, 1, 22)});
  }
  double max_err = 0.0;
  std::string worst_name;
  for (const auto& [name, err] : worst) {
    if (err >= max_err) {
      max_err = err;
      worst_name = name;
    }
  }
  const double secs = seconds_since(t0);
  return {max_err < 1e-4 && secs < 60.0,
          std::to_string(worst.size()) + " functions x 100 cases, worst " + worst_name +
              fmt(" %.2g, %.1f s", max_err, secs)};
}

double bone_error(const Pose& p, const Skeleton& s) {
  double e = 0.0;
  for (std::size_t j = 1; j < s.size(); ++j) {
    const double want = s.bone(j).norm();
    if (want < 1e-9) continue;
    e += std::abs((p[j] - p[s.parent(j)]).norm() - want) / want;
  }
  return e / static_cast<double>(s.size() - 1);
}

Dataset ablation_dataset(std::uint64_t seed) {
  DatasetConfig c;
  c.characters = 6;
  c.motions = 40;
  c.seed = seed;
  return generate_dataset(c);
}

Outcome fk_structure(const Dataset& ds) {
  Rng rng(3);
  const Skeleton s = make_character("c", random_bone_scales(rng));
  double worst = 0.0;
  for (int f = 0; f < 10000; ++f) {
    Rotations q(s.size());
    for (Quaternion& r : q) r = random_unit(rng);
    const Pose p = fk_forward(q, s);
    for (std::size_t j = 1; j < s.size(); ++j) {
      const double want = s.bone(j).norm();
      worst = std::max(worst, std::abs((p[j] - p[s.parent(j)]).norm() - want) / want);
    }
  }
  // Trained position-only baselines stretch bones on unseen characters.
  std::string detail = fmt("10000 frames, worst relative bone error %.2g", worst);
  bool baselines_stretch = true;
  for (GeneratorKind kind : {GeneratorKind::kRnn, GeneratorKind::kMlp}) {
    TrainConfig c;
    c.mode = TrainMode::kAuto;
    c.generator = kind;
    c.seed = 3;
    Trainer tr(ds.train, c);
    tr.run(500);
    double err = 0.0;
    int n = 0;
    for (const TestPair& p : ds.test) {
      if (!is_new_character(p.scenario)) continue;
      const MotionClip out = retarget(tr.generator(), p.input, p.truth.skeleton);
      for (const Pose& pose : out.local) {
        err += bone_error(pose, p.truth.skeleton);
        ++n;
      }
    }
    err /= n;
    baselines_stretch = baselines_stretch && err > 0.01;
    detail += std::string("; trained ") + generator_kind_name(kind) +
              fmt(" baseline bone error %.1f%%", 100.0 * err);
  }
  return {worst <= 1e-6 && baselines_stretch, detail};
}

Outcome preprocessing() {
  Rng rng(4);
  double recon = 0.0, invariance = 0.0;
  constexpr MotionKind kinds[] = {MotionKind::kWalk, MotionKind::kArmWave, MotionKind::kIdleSway,
                                  MotionKind::kTurnInPlace};
  for (int i = 0; i < 100; ++i) {
    const Skeleton s = make_character("c", random_bone_scales(rng));
    MotionParams p = random_motion_params(rng, kinds[i % 4]);
    if (i % 5 == 0) p.turn_rate = uniform(rng, -6.0, 6.0);  // spinning while moving
    const Performance perf = generate_performance(p, 60);
    const auto absolute = perform_absolute(perf, s);
    const MotionClip clip = preprocess(absolute, s);
    const auto back = world_positions(clip);
    for (std::size_t t = 0; t < back.size(); ++t) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        recon = std::max(recon, (back[t][j] - absolute[t][j]).norm());
      }
    }
    const Mat3 yaw = yaw_matrix(uniform(rng, -180.0, 180.0));
    auto turned = absolute;
    for (Pose& pose : turned) {
      for (Vec3& v : pose) v = yaw * v;
    }
    const MotionClip other = preprocess(turned, s);
    for (std::size_t t = 0; t < clip.length(); ++t) {
      for (std::size_t j = 0; j < s.size(); ++j) {
        invariance = std::max(invariance, (other.local[t][j] - clip.local[t][j]).norm());
      }
    }
  }
  return {recon <= 1e-5 && invariance <= 1e-5,
          fmt("100 clips, reconstruction %.2g cm, yaw invariance %.2g cm", recon, invariance)};
}

Outcome causality() {
  Rng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Skeleton a = make_character("a", random_bone_scales(rng));
    const Skeleton b = make_character("b", random_bone_scales(rng));
    const auto kind = static_cast<MotionKind>(i % 4);
    const MotionClip clip =
        perform(generate_performance(random_motion_params(rng, kind), 40), a);
    Rng init(100 + i);
    KinematicNetwork net(ModelConfig::desk(), FeatureNormalizer::fit({&clip}), init);
    for (nn::Parameter* p : net.params().all()) {
      for (double& v : p->value.values()) v += 0.1 * gaussian(rng);
    }
    const MotionClip full = retarget(net, clip, b);
    const std::size_t cut = 2 + uniform_index(rng, clip.length() - 2);
    const MotionClip part = retarget(net, clip.window(0, cut), b);
    for (std::size_t t = 0; t < cut; ++t) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        worst = std::max(worst, (full.local[t][j] - part.local[t][j]).norm());
      }
      worst = std::max(worst, (full.global[t].velocity - part.global[t].velocity).norm());
      worst = std::max(worst, std::abs(full.global[t].dyaw - part.global[t].dyaw));
    }
  }
  return {worst <= 1e-6, fmt("20 pairs, worst prefix difference %.2g", worst)};
}

double held_out_mse(const Generator& g, const Dataset& ds) {
  double s = 0.0;
  int n = 0;
  for (const TestPair& p : ds.test) {
    if (!is_new_character(p.scenario)) continue;
    s += mse(retarget(g, p.input, p.truth.skeleton), p.truth);
    ++n;
  }
  return s / n;
}

struct AblationResult {
  Outcome outcome;
  std::unique_ptr<Trainer> adversarial;  // first seed's adv-cycle model
};

AblationResult ablation(const Dataset& first) {
  AblationResult result;
  const auto t0 = Clock::now();
  int passes = 0, fails = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5 && passes < 3 && fails < 3; ++seed) {
    const Dataset ds = seed == 1 ? first : ablation_dataset(seed);
    std::map<TrainMode, double> m;
    for (TrainMode mode : {TrainMode::kAuto, TrainMode::kCycle, TrainMode::kAdvCycle}) {
      TrainConfig c;
      c.mode = mode;
      c.seed = seed;
      auto tr = std::make_unique<Trainer>(ds.train, c);
      tr->run(2000);
      m[mode] = held_out_mse(tr->generator(), ds);
      if (seed == 1 && mode == TrainMode::kAdvCycle) result.adversarial = std::move(tr);
    }
    const double tol = 1.05;
    const bool ok = m[TrainMode::kAdvCycle] <= tol * m[TrainMode::kCycle] &&
                    m[TrainMode::kCycle] <= tol * m[TrainMode::kAuto];
    (ok ? passes : fails)++;
    std::printf("  seed %llu: held-out mse adv-cycle %.5f, cycle %.5f, auto %.5f -> %s\n",
                static_cast<unsigned long long>(seed), m[TrainMode::kAdvCycle],
                m[TrainMode::kCycle], m[TrainMode::kAuto], ok ? "ordered" : "not ordered");
    std::fflush(stdout);
  }
  detail = std::to_string(passes) + " of " + std::to_string(passes + fails) +
           " seeds ordered adv-cycle <= cycle <= auto (5% ties)" +
           fmt(", %.0f s", seconds_since(t0));
  result.outcome = {passes > fails, detail};
  return result;
}

Outcome loss_terms(const Dataset& ds) {
  Rotations q(22);
  q[5] = euler_xyz(0, 130, 0);
  const double twist = twist_loss({q}, {}, 100.0);
  q[5] = euler_xyz(0, -130, 0);
  const double twist_neg = twist_loss({q}, {}, 100.0);
  const std::vector<std::array<double, 4>> constant(30, {0.4, 0.0, -1.2, 2.0});
  const double smooth = smoothing_loss(constant, constant);

  Rng rng(7);
  Sequence a(10, std::vector<double>(70)), b = a;
  for (auto& f : a) for (double& v : f) v = gaussian(rng);
  for (auto& f : b) for (double& v : f) v = gaussian(rng);
  const bool same_switch =
      adversarial_or_reconstruction_loss(b, a, 0.2, 0.7, true, 0.001).generator ==
      square_loss(b, a);

  TrainConfig c;
  c.mode = TrainMode::kAdvCycle;
  c.batch = 4;
  c.seed = 7;
  Trainer tr(ds.train, c);
  Batch batch = tr.sample_batch();
  for (std::size_t i = 0; i < batch.target.size(); ++i) {
    batch.target[i] = batch.clips[i]->skeleton.name() == tr.skeletons()[0].name() ? 1 : 0;
  }
  auto snapshot = [&] {
    std::vector<double> v;
    for (const nn::Parameter* p : std::as_const(*tr.discriminator()).params().all()) {
      v.insert(v.end(), p->value.values().begin(), p->value.values().end());
    }
    return v;
  };
  const auto before = snapshot();
  tr.force_r_b_mean(0.2);
  tr.train_step(batch);
  const bool frozen = snapshot() == before;
  tr.force_r_b_mean(0.35);
  tr.train_step(batch);
  const bool resumed = snapshot() != before;

  const bool ok = std::abs(twist - 900.0) < 1e-6 && std::abs(twist_neg - 900.0) < 1e-6 &&
                  smooth == 0.0 && same_switch && frozen && resumed;
  return {ok, fmt("twist %.6f / %.6f, smoothing %.1f", twist, twist_neg, smooth) +
                  ", B=A switch " + (same_switch ? "exact" : "differs") +
                  ", discriminator " + (frozen ? "frozen" : "moved") + " at r=0.2, " +
                  (resumed ? "updated" : "frozen") + " at r=0.35"};
}

Outcome copy_exactness(const Dataset& ds) {
  double worst = 0.0;
  for (const TestPair& p : ds.test) {
    worst = std::max(worst, mse(copy_retarget(p.input, p.truth.skeleton), p.truth));
    worst = std::max(worst, mse(copy_retarget(p.input, p.input.skeleton), p.input));
  }
  return {worst <= 1e-10,
          std::to_string(ds.test.size()) + fmt(" pairs plus self-retargets, worst mse %.2g", worst)};
}

Outcome determinism(const Dataset& ds) {
  auto log = [&] {
    TrainConfig c;
    c.mode = TrainMode::kAdvCycle;
    c.batch = 4;
    c.seed = 9;
    Trainer tr(ds.train, c);
    std::ostringstream os;
    tr.run(20, &os);
    return std::make_pair(os.str(), nn::write_checkpoint_json(tr.checkpoint()));
  };
  const auto [log_a, ckpt_a] = log();
  const auto [log_b, ckpt_b] = log();
  const bool same_logs = log_a == log_b;
  const bool same_ckpt = ckpt_a == ckpt_b;

  const nn::Checkpoint parsed = nn::parse_checkpoint_json(ckpt_a);
  const bool ckpt_round = nn::write_checkpoint_json(parsed) == ckpt_a;
  double clip_err = 0.0;
  for (const TestPair& p : ds.test) {
    const MotionClip back = parse_clip_json(write_clip_json(p.truth));
    for (std::size_t t = 0; t < back.length(); ++t) {
      for (std::size_t j = 0; j < back.local[t].size(); ++j) {
        clip_err = std::max(clip_err, (back.local[t][j] - p.truth.local[t][j]).norm());
      }
      clip_err = std::max(clip_err, (back.global[t].velocity - p.truth.global[t].velocity).norm());
      clip_err = std::max(clip_err, std::abs(back.global[t].dyaw - p.truth.global[t].dyaw));
    }
  }
  const bool ok = same_logs && same_ckpt && ckpt_round && clip_err <= 1e-9;
  return {ok, std::string("metric logs ") + (same_logs ? "identical" : "differ") +
                  ", checkpoints " + (same_ckpt && ckpt_round ? "bit-stable" : "unstable") +
                  fmt(", clip round trip %.2g", clip_err)};
}

Outcome denoising(const Dataset& ds, const Generator& g) {
  Rng rng(10);
  int lower = 0, total = 0;
  double ratio = 0.0;
  for (const TestPair& p : ds.test) {
    if (total == 20) break;
    auto absolute = world_positions(p.input);
    for (Pose& pose : absolute) {
      for (Vec3& v : pose) v += Vec3(gaussian(rng), gaussian(rng), gaussian(rng));
    }
    const MotionClip noisy = preprocess(absolute, p.input.skeleton, p.input.fps);
    const MotionClip out = retarget(g, noisy, p.input.skeleton);
    const EndEffectorTrack a = end_effectors(noisy);
    const EndEffectorTrack b = end_effectors(out);
    double tv_in = 0.0, tv_out = 0.0;
    for (std::size_t k = 0; k < a.joints.size(); ++k) {
      tv_in += height_total_variation(a, k);
      tv_out += height_total_variation(b, k);
    }
    lower += tv_out < tv_in ? 1 : 0;
    ratio += tv_out / tv_in / 20.0;
    ++total;
  }
  return {total == 20 && lower >= 16,
          std::to_string(lower) + " of " + std::to_string(total) +
              fmt(" clips smoother, mean output/input variation %.2f", ratio)};
}

}  // namespace

// With arguments, runs only the listed criteria (10 implies the training of 6).
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto want = [&](int id) { return only.empty() || only.count(id) > 0; };

  std::printf("acceptance criteria\n");
  if (want(1)) report(1, "rotation algebra", rotation_algebra());
  if (want(2)) report(2, "differentiability", differentiability());
  const Dataset ds = ablation_dataset(1);
  if (want(3)) report(3, "FK bone-length guarantee", fk_structure(ds));
  if (want(4)) report(4, "preprocessing exactness", preprocessing());
  if (want(5)) report(5, "online causality", causality());
  if (want(6) || want(10)) {
    AblationResult ab = ablation(ds);
    if (want(6)) report(6, "training ablation ordering", ab.outcome);
    if (want(10)) report(10, "denoising", denoising(ds, ab.adversarial->generator()));
  }
  if (want(7)) report(7, "loss terms", loss_terms(ds));
  if (want(8)) report(8, "copy baseline exactness", copy_exactness(ds));
  if (want(9)) report(9, "determinism and serialization", determinism(ds));
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
