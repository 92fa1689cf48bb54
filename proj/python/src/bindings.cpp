#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kinnet/baselines.hpp"
#include "kinnet/clip_io.hpp"
#include "kinnet/dataset.hpp"
#include "kinnet/errors.hpp"
#include "kinnet/evaluation.hpp"
#include "kinnet/fk.hpp"
#include "kinnet/model.hpp"
#include "kinnet/quat.hpp"
#include "kinnet/training.hpp"

namespace py = pybind11;
using namespace kinnet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Quaternion quat_of(const Array& a) {
  if (a.ndim() != 1 || a.shape(0) != 4) throw ShapeError("expected a quaternion of shape (4,)");
  return {a.at(0), a.at(1), a.at(2), a.at(3)};
}

Array poses_array(const std::vector<Pose>& poses) {
  const std::size_t joints = poses.empty() ? 0 : poses[0].size();
  Array out({poses.size(), joints, std::size_t{3}});
  auto w = out.mutable_unchecked<3>();
  for (std::size_t t = 0; t < poses.size(); ++t) {
    for (std::size_t j = 0; j < joints; ++j) {
      for (int c = 0; c < 3; ++c) w(t, j, c) = poses[t][j][c];
    }
  }
  return out;
}

// Trainer keeps pointers into its clips, so the clips live beside it.
struct OwningTrainer {
  OwningTrainer(std::vector<MotionClip> c, const TrainConfig& config)
      : clips(std::move(c)), trainer(clips, config) {}
  std::vector<MotionClip> clips;
  Trainer trainer;
};

}  // namespace

PYBIND11_MODULE(_kinnet, m) {
  m.doc() = "Neural kinematic networks for unsupervised motion retargetting";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def("quat_to_rotmat", [](const Array& q) { return quat_to_rotmat(quat_of(q)); });
  m.def("quat_from_rotmat", [](const Mat3& r) { return quat_from_rotmat(r).vec(); });
  m.def("axis_angle_quat",
        [](const Vec3& axis, double degrees) { return axis_angle_quat(axis, degrees).vec(); });
  m.def("twist_angle_y", [](const Array& q) { return quat_twist_angle_y(quat_of(q)); });

  py::class_<Skeleton>(m, "Skeleton")
      .def_static("from_json", &parse_skeleton_json)
      .def("to_json", &write_skeleton_json)
      .def_property_readonly("name", &Skeleton::name)
      .def_property_readonly("height", &Skeleton::height)
      .def_property_readonly("joint_names",
                             [](const Skeleton& s) {
                               std::vector<std::string> out;
                               for (const Joint& j : s.joints()) out.push_back(j.name);
                               return out;
                             })
      .def_property_readonly("parents",
                             [](const Skeleton& s) {
                               std::vector<int> out;
                               for (const Joint& j : s.joints()) out.push_back(j.parent);
                               return out;
                             })
      .def("scaled", &Skeleton::scaled)
      .def("__len__", &Skeleton::size);

  m.def(
      "fk",
      [](const Array& quats, const Skeleton& skeleton) {
        if (quats.ndim() != 2 || quats.shape(1) != 4 ||
            static_cast<std::size_t>(quats.shape(0)) != skeleton.size()) {
          throw ShapeError("expected quaternions of shape (joints, 4)");
        }
        std::vector<Quaternion> q(skeleton.size());
        auto r = quats.unchecked<2>();
        for (std::size_t j = 0; j < q.size(); ++j) q[j] = {r(j, 0), r(j, 1), r(j, 2), r(j, 3)};
        return poses_array({fk_forward(q, skeleton)});
      },
      py::arg("quats"), py::arg("skeleton"));

  py::class_<MotionClip>(m, "Clip")
      .def_static("from_json", &parse_clip_json)
      .def("to_json", &write_clip_json)
      .def_property_readonly("skeleton", [](const MotionClip& c) { return c.skeleton; })
      .def_readonly("fps", &MotionClip::fps)
      .def_property_readonly("local", [](const MotionClip& c) { return poses_array(c.local); })
      .def_property_readonly("world",
                             [](const MotionClip& c) { return poses_array(world_positions(c)); })
      .def_property_readonly("has_rotations", &MotionClip::has_rotations)
      .def("window", &MotionClip::window)
      .def("__len__", &MotionClip::length);

  py::class_<DatasetConfig>(m, "DatasetConfig")
      .def(py::init<>())
      .def_readwrite("characters", &DatasetConfig::characters)
      .def_readwrite("motions", &DatasetConfig::motions)
      .def_readwrite("seed", &DatasetConfig::seed)
      .def_readwrite("train_frames", &DatasetConfig::train_frames)
      .def_readwrite("test_frames", &DatasetConfig::test_frames)
      .def_readwrite("pairs_per_scenario", &DatasetConfig::pairs_per_scenario);

  py::class_<TestPair>(m, "TestPair")
      .def_readonly("id", &TestPair::id)
      .def_property_readonly("scenario",
                             [](const TestPair& p) { return std::string(scenario_name(p.scenario)); })
      .def_readonly("input", &TestPair::input)
      .def_readonly("truth", &TestPair::truth);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("train", &Dataset::train)
      .def_readonly("test", &Dataset::test)
      .def("training_skeletons",
           [](const Dataset& d) {
             std::vector<Skeleton> out;
             for (const Skeleton* s : d.training_skeletons()) out.push_back(*s);
             return out;
           })
      .def("skeleton", [](const Dataset& d, const std::string& name) {
        return d.character(name).skeleton;
      });

  m.def("generate_dataset", &generate_dataset);
  m.def("save_dataset", &save_dataset);
  m.def("load_dataset", &load_dataset);

  py::class_<Generator>(m, "Generator")
      .def_property_readonly("kind",
                             [](const Generator& g) { return generator_kind_name(g.kind()); })
      .def("retarget", &retarget, py::arg("clip"), py::arg("target"));
  m.def("load_model", py::overload_cast<const std::filesystem::path&>(&load_generator));

  m.def("copy_retarget",
        [](const MotionClip& clip, const Skeleton& target) { return copy_retarget(clip, target); });

  m.def("mse", py::overload_cast<const MotionClip&, const MotionClip&>(&mse),
        py::arg("prediction"), py::arg("truth"));
  m.def("movement_variance", &movement_variance, py::arg("clip"), py::arg("height"));

  py::class_<OwningTrainer>(m, "Trainer")
      .def(py::init([](std::vector<MotionClip> clips, const std::string& config) {
             return std::make_unique<OwningTrainer>(
                 std::move(clips), TrainConfig::from_json(nlohmann::json::parse(config)));
           }),
           py::arg("clips"), py::arg("config_json"))
      .def_property_readonly("step", [](const OwningTrainer& t) { return t.trainer.step_count(); })
      .def("train_step",
           [](OwningTrainer& t) {
             const StepMetrics s = t.trainer.train_step();
             return py::dict(py::arg("cycle") = s.cycle, py::arg("r_gen") = s.r_gen,
                             py::arg("r_disc") = s.r_disc, py::arg("twist") = s.twist,
                             py::arg("smooth") = s.smooth, py::arg("total") = s.total);
           })
      .def("run", [](OwningTrainer& t, long steps) { t.trainer.run(steps); })
      .def("save", [](const OwningTrainer& t, const std::filesystem::path& p) {
        t.trainer.save(p);
      });

  m.def("default_train_config", [](const std::string& mode) {
    TrainConfig c;
    c.mode = parse_train_mode(mode);
    return c.to_json().dump();
  });
}
