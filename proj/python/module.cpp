#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "civ/baselines/bench.hpp"
#include "civ/clengine/info_nce.hpp"
#include "civ/error.hpp"
#include "civ/clengine/metrics.hpp"
#include "civ/explain/geometry.hpp"
#include "civ/numcore/cosine.hpp"
#include "civ/sampling/positive.hpp"
#include "civ/service/payloads.hpp"
#include "civ/service/service.hpp"

namespace py = pybind11;
using namespace civ;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    return Matrix(1, static_cast<std::size_t>(a.shape(0)), std::vector<double>(a.data(), a.data() + a.size()));
  }
  if (a.ndim() != 2) throw py::value_error("expected a 1-D or 2-D array");
  return Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

// Library exceptions surface as ValueError (bad input) or RuntimeError.
template <typename F>
auto translate(F&& f) {
  try {
    return f();
  } catch (const ApiError& e) {
    throw py::value_error(e.body().dump());
  } catch (const civ::Error& e) {
    throw py::value_error(std::string(e.kind()) + ": " + e.what());
  } catch (const Json::exception& e) {
    throw py::value_error(e.what());
  }
}

BenchConfig bench_config(const Json& j) {
  BenchConfig c;
  c.synthetic = j.contains("synthetic") ? synth_spec_from_json(j.at("synthetic")) : SynthSpec{};
  if (j.contains("selected")) c.selected = j.at("selected").get<std::vector<std::string>>();
  if (j.contains("encoder")) c.encoder = mlp_spec_from_json(j.at("encoder"));
  if (j.contains("pretrain")) c.pretrain = pretrain_config_from_json(j.at("pretrain"));
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("knn_k")) c.knn_k = j.at("knn_k").get<std::size_t>();
  return c;
}

}  // namespace

PYBIND11_MODULE(_civ, m) {
  m.doc() = "Contrastive training on data with missing features";

  m.def("cosine_similarity", [](const Array& a, const Array& b) {
    return translate([&] { return cosine_similarity(to_vector(a), to_vector(b)); });
  });

  m.def(
      "info_nce",
      [](const Array& q, const Array& k, const Array& negatives, double t) {
        return translate([&] {
          const Matrix neg = negatives.size() == 0 ? Matrix(0, static_cast<std::size_t>(q.size())) : to_matrix(negatives);
          const InfoNceResult r = info_nce(to_vector(q), to_vector(k), neg, t);
          return py::make_tuple(r.loss, py::array_t<double>(r.grad_q.size(), r.grad_q.data()));
        });
      },
      py::arg("q"), py::arg("k_plus"), py::arg("negatives"), py::arg("temperature") = 1.0,
      "InfoNCE loss and its gradient with respect to q.");

  m.def(
      "positive_score",
      [](const Array& xs, const Array& xf, double ys, double yf, double norm) {
        return translate([&] { return positive_score(to_vector(xs), to_vector(xf), ys, yf, norm); });
      },
      py::arg("x_semi"), py::arg("x_full"), py::arg("label_semi"), py::arg("label_full"), py::arg("norm"));
  m.def(
      "negative_score",
      [](const Array& xa, const Array& x, double ya, double y, double norm) {
        return translate([&] { return negative_score(to_vector(xa), to_vector(x), ya, y, norm); });
      },
      py::arg("x_anchor"), py::arg("x"), py::arg("label_anchor"), py::arg("label"), py::arg("norm"));

  m.def(
      "project2d",
      [](const Array& records, const std::string& method, std::uint64_t seed, bool standardize) {
        return translate([&] {
          ProjectionOptions opt;
          opt.standardize = standardize;
          return to_array(project2d(to_matrix(records), projection_method_from_string(method), seed, opt).coords);
        });
      },
      py::arg("records"), py::arg("method") = "pca", py::arg("seed") = 0, py::arg("standardize") = true);

  m.def(
      "synth_csv",
      [](const std::string& spec_json) {
        return translate([&] {
          const RawTable t = synth_generate(synth_spec_from_json(Json::parse(spec_json)));
          std::ostringstream out;
          for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
          out << "\n";
          for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
              if (c) out << ",";
              if (const double* d = std::get_if<double>(&row[c])) out << format_number(*d);
              if (const std::string* s = std::get_if<std::string>(&row[c])) out << *s;
            }
            out << "\n";
          }
          return out.str();
        });
      },
      py::arg("spec_json") = "{}", "Synthetic table as CSV text.");

  m.def("run_bench", [](const std::string& config) {
    return translate([&] {
      py::gil_scoped_release release;
      return to_json(run_bench(bench_config(Json::parse(config)))).dump();
    });
  });

  m.def(
      "detect_collapse",
      [](const std::string& stream, std::size_t window, double mean_threshold, double variance_threshold) {
        return translate([&] {
          std::vector<EpochMetrics> ms;
          // Only the score statistics matter to the rule; other fields may be omitted.
          for (const Json& e : Json::parse(stream)) {
            EpochMetrics m;
            m.epoch = e.value("epoch", ms.size() + 1);
            for (auto [key, field] : {std::pair{"mean_pos", &m.mean_pos}, std::pair{"mean_neg", &m.mean_neg},
                                      std::pair{"var_neg", &m.var_neg}})
              if (e.contains(key) && !e.at(key).is_null()) *field = e.at(key).get<double>();
            ms.push_back(m);
          }
          const CollapseReport r = detect_collapse(ms, {window, mean_threshold, variance_threshold});
          return py::make_tuple(r.collapsed, r.collapsed ? py::cast(r.first_offending_epoch) : py::none());
        });
      });

  py::class_<Service>(m, "Service")
      .def(py::init([](std::optional<std::string> log_dir, std::optional<std::uint64_t> seed) {
             return std::make_unique<Service>(ServiceOptions{std::move(log_dir), seed});
           }),
           py::arg("log_dir") = py::none(), py::arg("seed") = py::none())
      .def("create_session", [](Service& s, const std::string& b) { return translate([&] { return s.create_session(Json::parse(b)).dump(); }); })
      .def("session_info", [](Service& s, const std::string& id) { return translate([&] { return s.session_info(id).dump(); }); })
      .def("select_features", [](Service& s, const std::string& id, const std::string& b) {
        return translate([&] {
          py::gil_scoped_release release;
          return s.select_features(id, Json::parse(b)).dump();
        });
      })
      .def("embeddings", [](Service& s, const std::string& id, const Query& q) { return translate([&] { return s.embeddings(id, q).dump(); }); })
      .def("set_negative", [](Service& s, const std::string& id, const std::string& b) { return translate([&] { return s.set_negative(id, Json::parse(b)).dump(); }); })
      .def("set_positive", [](Service& s, const std::string& id, const std::string& b) { return translate([&] { return s.set_positive(id, Json::parse(b)).dump(); }); })
      .def("start_training", [](Service& s, const std::string& id, const std::string& b) { return translate([&] { return s.start_training(id, Json::parse(b)).dump(); }); })
      .def("wait_idle", [](Service& s, const std::string& id) {
        translate([&] {
          py::gil_scoped_release release;
          s.wait_idle(id);
          return 0;
        });
      })
      .def("events", [](Service& s, const std::string& id, std::uint64_t run) { return translate([&] { return s.stream(id, run)->frames(); }); })
      .def("metrics", [](Service& s, const std::string& id) { return translate([&] { return s.metrics(id).dump(); }); })
      .def("save_log", [](Service& s, const std::string& id) { return translate([&] { return s.save_log(id).dump(); }); })
      .def("switch_log", [](Service& s, const std::string& id, std::uint64_t lid) { return translate([&] { return s.switch_log(id, lid).dump(); }); })
      .def("infer", [](Service& s, const std::string& id, const std::string& b) { return translate([&] { return s.infer(id, Json::parse(b)).dump(); }); });
}
