#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "defnet/commands.hpp"
#include "defnet/errors.hpp"
#include "defnet/evidential_loss.hpp"
#include "defnet/joint_head.hpp"
#include "defnet/metrics.hpp"
#include "defnet/multitask.hpp"
#include "defnet/nig.hpp"
#include "defnet/synth.hpp"

namespace py = pybind11;
using namespace defnet;

namespace {

// Runs a CLI command in-process and returns (exit code, stdout, stderr).
template <int (*Cmd)(const CommandOptions&, std::ostream&, std::ostream&)>
py::tuple run(const CommandOptions& opts) {
  std::ostringstream out, err;
  int rc = 0;
  {
    py::gil_scoped_release release;
    rc = Cmd(opts, out, err);
  }
  return py::make_tuple(rc, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_defnet, m) {
  m.doc() = "Evidential NIG fusion and multitask quality losses";

  py::class_<NigParams>(m, "NigParams")
      .def(py::init<>())
      .def(py::init([](double d, double v, double a, double b) { return NigParams{d, v, a, b}; }), py::arg("delta"),
           py::arg("v"), py::arg("alpha"), py::arg("beta"))
      .def_readwrite("delta", &NigParams::delta)
      .def_readwrite("v", &NigParams::v)
      .def_readwrite("alpha", &NigParams::alpha)
      .def_readwrite("beta", &NigParams::beta)
      .def("astuple", [](const NigParams& p) { return py::make_tuple(p.delta, p.v, p.alpha, p.beta); })
      .def(py::self == py::self)
      .def("__repr__", [](const NigParams& p) {
        std::ostringstream os;
        os.precision(17);
        os << "NigParams(" << p.delta << ", " << p.v << ", " << p.alpha << ", " << p.beta << ")";
        return os.str();
      });

  m.def("constrain", &constrain, py::arg("raw"));
  m.def("total_evidence", &total_evidence);
  m.def("aleatoric", &aleatoric);
  m.def("epistemic", &epistemic);
  m.def("fuse", &nig_fuse);
  m.def("fuse_n", [](const std::vector<NigParams>& ps) { return nig_fuse_n(ps); });
  m.def("average", [](const std::vector<NigParams>& ps) { return nig_average(ps); });
  m.def(
      "predictive_interval",
      [](const NigParams& p, double coverage) {
        const Interval i = predictive_interval(p, coverage);
        return py::make_tuple(i.lo, i.hi);
      },
      py::arg("params"), py::arg("coverage") = 0.95);

  m.def("nll_loss", &nll_loss);
  m.def("reg_loss", &reg_loss);
  m.def(
      "evidential_loss",
      [](const NigParams& p, double y, double tau) {
        const auto l = evidential_loss(p, y, tau);
        return py::dict(py::arg("nll") = l.nll, py::arg("reg") = l.reg, py::arg("total") = l.total);
      },
      py::arg("params"), py::arg("y"), py::arg("tau") = 0.05);
  m.def(
      "evidential_grad",
      [](const NigParams& p, double y, double tau) { return to_params(evidential_grad(p, y, tau)); },
      py::arg("params"), py::arg("y"), py::arg("tau") = 0.05);

  m.def(
      "joint_softmax",
      [](const std::vector<double>& logits, int c, int s, int d, double kappa) {
        return joint_softmax(logits, JointShape{c, s, d}, kappa).probs;
      },
      py::arg("logits"), py::arg("quality"), py::arg("scenes"), py::arg("distortions"), py::arg("kappa"));
  m.def(
      "marginals",
      [](const std::vector<double>& probs, int c, int s, int d) {
        const JointScore v{JointShape{c, s, d}, probs};
        if (probs.size() != v.shape.size()) throw InvalidInput("marginals: size does not match shape");
        return py::make_tuple(quality_marginal(v), scene_marginal(v), distortion_marginal(v));
      },
      py::arg("probs"), py::arg("quality"), py::arg("scenes"), py::arg("distortions"));
  m.def("quality_expectation", [](const std::vector<double>& pc) { return quality_expectation(pc); });

  m.def("thurstone_prob", &thurstone_prob);
  m.def("fidelity", &fidelity);

  m.def("srcc", [](const std::vector<double>& a, const std::vector<double>& b) { return srcc(a, b); });
  m.def("plcc", [](const std::vector<double>& a, const std::vector<double>& b) { return plcc(a, b); });
  m.def("normality_diag", [](const std::vector<double>& x) { return normality_diag(x); });

  m.def(
      "generate_mos",
      [](int n_samples, std::uint64_t seed, double noise_scale) {
        SynthConfig c;
        c.n_samples = n_samples;
        c.seed = seed;
        c.noise_scale = noise_scale;
        std::vector<double> mos;
        for (const auto& s : generate_dataset(c)) mos.push_back(s.mos);
        return mos;
      },
      py::arg("n_samples") = 2000, py::arg("seed") = 1, py::arg("noise_scale") = 0.05);

  py::class_<CommandOptions>(m, "CommandOptions")
      .def(py::init<>())
      .def_readwrite("config", &CommandOptions::config)
      .def_readwrite("seed", &CommandOptions::seed)
      .def_readwrite("out", &CommandOptions::out)
      .def_readwrite("dataset", &CommandOptions::dataset)
      .def_readwrite("model", &CommandOptions::model)
      .def_readwrite("nig", &CommandOptions::nig)
      .def_readwrite("split", &CommandOptions::split)
      .def_readwrite("corrupt_grad", &CommandOptions::corrupt_grad);

  m.def("datagen", &run<cmd_datagen>);
  m.def("train", &run<cmd_train>);
  m.def("evaluate", &run<cmd_eval>);
  m.def("gradcheck", &run<cmd_gradcheck>);
  m.def("fusedemo", &run<cmd_fusedemo>);
}
