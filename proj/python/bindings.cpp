#include <sstream>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wban/cluster_head.hpp"
#include "wban/codec.hpp"
#include "wban/engine.hpp"
#include "wban/fault_detect.hpp"
#include "wban/scenario.hpp"
#include "wban/selftest.hpp"

namespace py = pybind11;
using namespace wban;

namespace {

using QuantTuple = std::tuple<double, double, int>;

QuantTable to_specs(const std::vector<QuantTuple>& quant) {
  QuantTable specs;
  for (const auto& [lo, hi, bits] : quant) specs.push_back({lo, hi, bits});
  return specs;
}

std::span<const std::uint8_t> as_span(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

py::list events_to_py(const std::vector<EventRecord>& events) {
  py::list out;
  for (const auto& e : events) out.append(py::make_tuple(e.sensor_index, e.qvalue, e.t_offset_ms));
  return out;
}

std::vector<EventRecord> events_from_py(const py::dict& d) {
  std::vector<EventRecord> events;
  if (!d.contains("events")) return events;
  for (auto item : d["events"]) {
    auto t = item.cast<std::tuple<std::uint8_t, std::uint16_t, std::uint32_t>>();
    events.push_back({std::get<0>(t), std::get<1>(t), std::get<2>(t)});
  }
  return events;
}

py::dict frame_to_py(const Frame& frame) {
  py::dict d;
  d["kind"] = std::string(frame_kind_name(frame));
  d["fingerprint"] = frame_fingerprint(frame).id;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, DailyReport>) d["status"] = f.status.to_string();
        if constexpr (requires { f.events; }) d["events"] = events_to_py(f.events);
      },
      frame);
  return d;
}

Frame frame_from_py(const py::dict& d) {
  const auto kind = d["kind"].cast<std::string>();
  const Fingerprint fp{d["fingerprint"].cast<std::uint64_t>()};
  if (kind == "beacon") return Beacon{fp};
  if (kind == "ack") return Ack{fp};
  if (kind == "daily_report")
    return DailyReport{fp, SensorStatusField::parse(d["status"].cast<std::string>()), events_from_py(d)};
  if (kind == "emergency_broadcast") return EmergencyBroadcast{fp, events_from_py(d)};
  if (kind == "satellite_report") return SatelliteReport{fp, events_from_py(d)};
  throw std::invalid_argument("unknown frame kind '" + kind + "'");
}

PredictorModel make_model(std::size_t n_inputs, std::size_t n_hidden, std::optional<std::uint64_t> seed,
                          double scale, double lr) {
  if (!seed) return PredictorModel::zeros(n_inputs, n_hidden, lr);
  Rng rng(*seed);
  return PredictorModel::random(n_inputs, n_hidden, rng, scale, lr);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "WBAN simulator core";

  static py::exception<CodecError> codec_error(m, "CodecError", PyExc_ValueError);
  static py::exception<ScenarioError> scenario_error(m, "ScenarioError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const CodecError& e) {
      PyErr_SetObject(codec_error.ptr(),
                      py::make_tuple(std::string(to_string(e.kind())), e.what()).ptr());
    } catch (const ScenarioError& e) {
      PyErr_SetObject(scenario_error.ptr(), py::make_tuple(py::cast(e.violations())).ptr());
    } catch (const ScenarioIoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    }
  });

  m.def("crc16", [](const py::bytes& data) { return crc16(as_span(data)); }, py::arg("data"));
  m.def("quantize", [](double v, double lo, double hi, int bits) { return quantize(v, {lo, hi, bits}); },
        py::arg("value"), py::arg("lo"), py::arg("hi"), py::arg("bits") = 8);
  m.def("dequantize", [](std::uint32_t q, double lo, double hi, int bits) { return dequantize(q, {lo, hi, bits}); },
        py::arg("q"), py::arg("lo"), py::arg("hi"), py::arg("bits") = 8);
  m.def("build_status_field", [](const std::vector<bool>& v) { return build_status_field(v).to_string(); },
        py::arg("verdicts"));

  m.def(
      "encode_frame",
      [](const py::dict& frame, const std::vector<QuantTuple>& quant) {
        const Bytes b = encode_frame(frame_from_py(frame), to_specs(quant));
        return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
      },
      py::arg("frame"), py::arg("quant"));
  m.def(
      "decode_frame",
      [](const py::bytes& data, const std::vector<QuantTuple>& quant) {
        return frame_to_py(decode_frame(as_span(data), to_specs(quant)));
      },
      py::arg("data"), py::arg("quant"));

  m.def("classify", [](std::size_t k, std::size_t n) { return std::string(to_string(classify(k, n))); },
        py::arg("out_of_threshold"), py::arg("n_sensors"));
  m.def(
      "escalation_timeline",
      [](std::uint64_t horizon_ms, const std::vector<std::uint64_t>& acks, std::int64_t time1, std::int64_t time2,
         std::int64_t time3) {
        TimerConfig cfg;
        cfg.time1 = Duration(time1);
        cfg.time2 = Duration(time2);
        cfg.time3 = Duration(time3);
        std::vector<VirtualTime> ack_times;
        for (auto a : acks) ack_times.push_back(VirtualTime{a});
        std::vector<std::tuple<std::uint64_t, std::string, std::string>> out;
        for (const auto& e : escalation_timeline(cfg, VirtualTime{horizon_ms}, ack_times))
          out.emplace_back(e.time.ticks, e.action, std::string(to_string(e.stage_after)));
        return out;
      },
      py::arg("horizon_ms"), py::arg("ack_times_ms") = std::vector<std::uint64_t>{}, py::arg("time1_ms") = 100,
      py::arg("time2_ms") = 2000, py::arg("time3_ms") = 20000);

  m.def("error_rate", &error_rate, py::arg("reading"), py::arg("prediction"), py::arg("lo"), py::arg("hi"));

  py::class_<PredictorModel>(m, "Predictor")
      .def(py::init(&make_model), py::arg("n_inputs"), py::arg("n_hidden") = 4, py::arg("seed") = py::none(),
           py::arg("scale") = 0.5, py::arg("learning_rate") = 0.01)
      .def_readonly("n_inputs", &PredictorModel::n_inputs)
      .def_readonly("n_hidden", &PredictorModel::n_hidden)
      .def_property(
          "parameters", &PredictorModel::parameters,
          [](PredictorModel& self, const std::vector<double>& p) { self.set_parameters(p); })
      .def("predict", [](const PredictorModel& self, const std::vector<double>& x) { return predict(self, x); })
      .def("gradient", [](const PredictorModel& self, const std::vector<double>& x,
                          double target) { return loss_gradient(self, x, target); })
      .def("train", [](PredictorModel& self, const std::vector<double>& x, double target) {
        auto r = train_step(self, x, target);
        self = std::move(r.model);
        return r.loss;
      });

  m.def(
      "validate_scenario",
      [](const std::string& doc) {
        try {
          return validate(scenario_from_json(nlohmann::json::parse(doc)));
        } catch (const ScenarioError& e) {
          return e.violations();
        }
      },
      py::arg("scenario_json"));
  m.def(
      "run_scenario",
      [](const std::string& doc, std::optional<std::uint64_t> seed) {
        Scenario sc = scenario_from_json(nlohmann::json::parse(doc));
        if (seed) sc.seed = *seed;
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(sc);
        }
        std::ostringstream trace;
        r.write_trace(trace);
        return py::make_tuple(trace.str(), to_json(r.metrics).dump());
      },
      py::arg("scenario_json"), py::arg("seed") = py::none());

  m.def("selftest", [] {
    py::list out;
    for (const auto& r : run_selftest()) {
      py::dict d;
      d["name"] = r.name;
      d["passed"] = r.passed;
      d["failed"] = r.failed;
      d["first_failure"] = r.first_failure;
      out.append(d);
    }
    return out;
  });
}
