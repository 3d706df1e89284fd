#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dmgnn/cli.hpp"
#include "dmgnn/error.hpp"
#include "dmgnn/evaluation.hpp"
#include "dmgnn/graph.hpp"
#include "dmgnn/proximity.hpp"
#include "dmgnn/trainer.hpp"

namespace py = pybind11;
using namespace dmgnn;

namespace {

LabelMatrix to_labels(const std::vector<std::vector<int>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  LabelMatrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw ValidationError("label rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) m.set(i, c, rows[i][c] != 0);
  }
  return m;
}

py::dict network_summary(const AttributedNetwork& net) {
  py::dict d;
  d["num_nodes"] = net.num_nodes;
  d["num_edges"] = net.edges.size();
  d["num_attrs"] = net.num_attrs;
  d["num_labels"] = net.num_labels;
  d["multi_label"] = net.multi_label;
  d["homophily_ratio"] = net.labels ? py::cast(homophily_ratio(net)) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_dmgnn, m) {
  m.doc() = "Dual-domain graph transfer learning core";
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("load_network", [](const std::string& dir) { return network_summary(load_network(dir)); },
        py::arg("dir"));

  m.def(
      "ppmi",
      [](const std::string& dir, std::size_t K) {
        return compute_proximity(load_network(dir), K).entries.to_dense();
      },
      py::arg("dir"), py::arg("K") = 3);

  m.def(
      "schedules",
      [](double progress, double mu0) {
        const Schedule s = schedules(progress, mu0);
        return py::make_tuple(s.lr, s.lambda);
      },
      py::arg("progress"), py::arg("mu0") = 0.02);

  m.def(
      "f1_scores",
      [](const std::vector<std::vector<int>>& pred, const std::vector<std::vector<int>>& truth) {
        const Metrics r = f1_scores(to_labels(pred), to_labels(truth));
        return py::make_tuple(r.micro_f1, r.macro_f1);
      },
      py::arg("pred"), py::arg("truth"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
