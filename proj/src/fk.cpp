#include "kinnet/fk.hpp"

#include "kinnet/errors.hpp"

namespace kinnet {

namespace {

Quaternion quat_at(const double* q, std::size_t n) {
  return {q[4 * n], q[4 * n + 1], q[4 * n + 2], q[4 * n + 3]};
}

void world_rotations(const double* quats, const Skeleton& skeleton, Composition mode,
                     std::vector<Mat3>& local, std::vector<Mat3>& world) {
  const std::size_t n = skeleton.size();
  local.resize(n);
  world.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    local[j] = quat_to_rotmat(quat_at(quats, j));
    if (mode == Composition::kWorld || j == 0) {
      world[j] = local[j];
    } else {
      world[j] = world[skeleton.parent(j)] * local[j];
    }
  }
}

}  // namespace

void fk_forward_flat(const double* quats, const Skeleton& skeleton, Composition mode,
                     double* positions) {
  std::vector<Mat3> local;
  std::vector<Mat3> world;
  world_rotations(quats, skeleton, mode, local, world);
  positions[0] = positions[1] = positions[2] = 0.0;
  for (std::size_t j = 1; j < skeleton.size(); ++j) {
    const Vec3 p = Eigen::Map<const Vec3>(positions + 3 * skeleton.parent(j)) +
                   world[j] * skeleton.bone(j);
    Eigen::Map<Vec3>(positions + 3 * j) = p;
  }
}

void fk_backward_flat(const double* quats, const Skeleton& skeleton, Composition mode,
                      const double* upstream, double* grad) {
  const std::size_t n = skeleton.size();
  std::vector<Mat3> local;
  std::vector<Mat3> world;
  world_rotations(quats, skeleton, mode, local, world);

  // acc[j]: total dL/dp(j) including everything downstream of j.
  std::vector<Vec3> acc(n);
  std::vector<Mat3> d_world(n, Mat3::Zero());
  for (std::size_t j = 0; j < n; ++j) {
    acc[j] = Eigen::Map<const Vec3>(upstream + 3 * j);
  }
  // Children have larger indices, so one reverse sweep sees each joint complete.
  for (std::size_t j = n; j-- > 0;) {
    const int p = skeleton.parent(j);
    if (j > 0) {
      acc[p] += acc[j];
      d_world[j] += acc[j] * skeleton.bone(j).transpose();
    }
    Mat3 d_local;
    if (mode == Composition::kWorld || j == 0) {
      d_local = d_world[j];
    } else {
      d_local = world[p].transpose() * d_world[j];
      d_world[p] += d_world[j] * local[j].transpose();
    }
    const Quaternion g = quat_to_rotmat_grad(quat_at(quats, j), d_local);
    grad[4 * j] += g.r;
    grad[4 * j + 1] += g.i;
    grad[4 * j + 2] += g.j;
    grad[4 * j + 3] += g.k;
  }
}

std::vector<Vec3> fk_forward(std::span<const Quaternion> quats, const Skeleton& skeleton,
                             Composition mode) {
  if (quats.size() != skeleton.size()) {
    throw Error("joint/rotation arity mismatch");
  }
  std::vector<double> flat(4 * quats.size());
  for (std::size_t j = 0; j < quats.size(); ++j) {
    Eigen::Map<Vec4>(flat.data() + 4 * j) = quats[j].vec();
  }
  std::vector<double> pos(3 * quats.size());
  fk_forward_flat(flat.data(), skeleton, mode, pos.data());
  std::vector<Vec3> out(quats.size());
  for (std::size_t j = 0; j < quats.size(); ++j) {
    out[j] = Eigen::Map<const Vec3>(pos.data() + 3 * j);
  }
  return out;
}

std::vector<Quaternion> fk_backward(std::span<const Quaternion> quats, const Skeleton& skeleton,
                                    std::span<const Vec3> upstream, Composition mode) {
  if (quats.size() != skeleton.size() || upstream.size() != skeleton.size()) {
    throw Error("joint/rotation arity mismatch");
  }
  std::vector<double> flat(4 * quats.size());
  std::vector<double> up(3 * quats.size());
  for (std::size_t j = 0; j < quats.size(); ++j) {
    Eigen::Map<Vec4>(flat.data() + 4 * j) = quats[j].vec();
    Eigen::Map<Vec3>(up.data() + 3 * j) = upstream[j];
  }
  std::vector<double> grad(4 * quats.size(), 0.0);
  fk_backward_flat(flat.data(), skeleton, mode, up.data(), grad.data());
  std::vector<Quaternion> out(quats.size());
  for (std::size_t j = 0; j < quats.size(); ++j) {
    out[j] = Quaternion::from_vec(Eigen::Map<const Vec4>(grad.data() + 4 * j));
  }
  return out;
}

}  // namespace kinnet
