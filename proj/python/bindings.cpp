#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "wavefuse/analysis.hpp"
#include "wavefuse/config.hpp"
#include "wavefuse/fusion.hpp"
#include "wavefuse/io.hpp"
#include "wavefuse/parallel.hpp"
#include "wavefuse/pipeline.hpp"
#include "wavefuse/ssm.hpp"
#include "wavefuse/synth.hpp"
#include "wavefuse/wavelet.hpp"

namespace py = pybind11;
using namespace wavefuse;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

FeatureMap to_map(const Array& a) {
  const py::buffer_info info = a.request();
  Shape s;
  if (info.ndim == 2) {
    s = {1, static_cast<std::size_t>(info.shape[0]), static_cast<std::size_t>(info.shape[1])};
  } else if (info.ndim == 3) {
    s = {static_cast<std::size_t>(info.shape[0]), static_cast<std::size_t>(info.shape[1]),
         static_cast<std::size_t>(info.shape[2])};
  } else {
    throw Error("expected a 2-D (H, W) or 3-D (C, H, W) array");
  }
  const auto* p = static_cast<const float*>(info.ptr);
  return FeatureMap(s, std::vector<float>(p, p + s.size()));
}

Array to_array(const FeatureMap& x) {
  Array out({x.channels(), x.height(), x.width()});
  std::copy(x.data().begin(), x.data().end(), out.mutable_data());
  return out;
}

py::tuple to_tuple(const SubBands& s) {
  return py::make_tuple(to_array(s.ll), to_array(s.lh), to_array(s.hl), to_array(s.hh));
}

SubBands from_tuple(const py::sequence& t) {
  if (t.size() != 4) throw Error("expected (ll, lh, hl, hh)");
  return {to_map(t[0].cast<Array>()), to_map(t[1].cast<Array>()),
          to_map(t[2].cast<Array>()), to_map(t[3].cast<Array>())};
}

py::array_t<float> vec_array(const std::vector<float>& v) {
  return py::array_t<float>(static_cast<py::ssize_t>(v.size()), v.data());
}

void def_field(py::class_<ScanParams>& cls, const char* name,
               std::vector<float> ScanParams::*field) {
  cls.def_property(
      name, [field](const ScanParams& p) { return vec_array(p.*field); },
      [field](ScanParams& p, const Array& a) {
        p.*field = std::vector<float>(a.data(), a.data() + a.size());
      });
}

TieMode parse_tie(const std::string& s) {
  if (s == "inclusive") return TieMode::inclusive;
  if (s == "strict") return TieMode::strict;
  throw Error("tie must be 'inclusive' or 'strict'");
}

py::dict shape_dict(const Shape& s) {
  py::dict d;
  d["channels"] = s.channels;
  d["height"] = s.height;
  d["width"] = s.width;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Haar wavelet and selective-scan fusion of RGB/infrared feature maps.";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.def("set_num_threads", &set_num_threads, py::arg("n"));

  m.def("dwt2_haar", [](const Array& x) { return to_tuple(dwt2_haar(to_map(x))); },
        py::arg("x"), "One-level orthonormal Haar transform -> (ll, lh, hl, hh).");
  m.def("idwt2_haar",
        [](const Array& ll, const Array& lh, const Array& hl, const Array& hh) {
          return to_array(idwt2_haar({to_map(ll), to_map(lh), to_map(hl), to_map(hh)}));
        },
        py::arg("ll"), py::arg("lh"), py::arg("hl"), py::arg("hh"));
  m.def("dwt2_multilevel",
        [](const Array& x, std::size_t levels) {
          py::list out;
          for (const auto& s : dwt2_multilevel(to_map(x), levels)) out.append(to_tuple(s));
          return out;
        },
        py::arg("x"), py::arg("levels"));
  m.def("idwt2_multilevel",
        [](const py::sequence& levels) {
          std::vector<SubBands> sb;
          for (const auto& l : levels) sb.push_back(from_tuple(l.cast<py::sequence>()));
          return to_array(idwt2_multilevel(sb));
        },
        py::arg("levels"));

  py::class_<ScanParams> scan(m, "ScanParams");
  scan.def_static("zeros", &ScanParams::zeros, py::arg("d_model"), py::arg("d_state"))
      .def_static("random",
                  [](std::size_t d_model, std::size_t d_state, std::uint64_t seed) {
                    Rng rng(seed);
                    return ScanParams::random(d_model, d_state, rng);
                  },
                  py::arg("d_model"), py::arg("d_state"), py::arg("seed") = 0)
      .def_readonly("d_model", &ScanParams::d_model)
      .def_readonly("d_state", &ScanParams::d_state);
  def_field(scan, "a_log", &ScanParams::a_log);
  def_field(scan, "d_skip", &ScanParams::d_skip);
  def_field(scan, "proj_b", &ScanParams::proj_b);
  def_field(scan, "proj_c", &ScanParams::proj_c);
  def_field(scan, "proj_delta", &ScanParams::proj_delta);
  def_field(scan, "delta_bias", &ScanParams::delta_bias);

  m.def("selective_scan",
        [](const Array& seq, const ScanParams& p) {
          if (seq.ndim() != 2) throw Error("sequence must be a (T, d_model) array");
          const auto t = static_cast<std::size_t>(seq.shape(0));
          const auto d = static_cast<std::size_t>(seq.shape(1));
          const Sequence y = selective_scan(
              Sequence(t, d, std::vector<float>(seq.data(), seq.data() + seq.size())), p);
          Array out({t, d});
          std::copy(y.data().begin(), y.data().end(), out.mutable_data());
          return out;
        },
        py::arg("seq"), py::arg("params"));
  m.def("ss2d",
        [](const Array& x, const std::vector<ScanParams>& params,
           const std::string& aggregation) {
          Ss2dParams p;
          p.directions = params;
          if (aggregation == "mean") {
            p.aggregation = Aggregation::mean;
          } else if (aggregation != "sum") {
            throw Error("aggregation must be 'sum' or 'mean'");
          }
          return to_array(ss2d(to_map(x), p));
        },
        py::arg("x"), py::arg("params"), py::arg("aggregation") = "sum");

  m.def("hfe",
        [](const Array& rgb, const Array& ir, const std::string& tie) {
          return to_array(hfe(to_map(rgb), to_map(ir), parse_tie(tie)));
        },
        py::arg("rgb"), py::arg("ir"), py::arg("tie") = "inclusive");
  m.def("channel_swap",
        [](const Array& a, const Array& b, double fraction) {
          auto [x, y] = channel_swap(to_map(a), to_map(b), fraction);
          return py::make_tuple(to_array(x), to_array(y));
        },
        py::arg("a"), py::arg("b"), py::arg("fraction") = 0.5);

  m.def("normalized_entropy",
        [](const Array& band, std::size_t bins) {
          return normalized_entropy(std::span<const float>(band.data(), band.size()), bins);
        },
        py::arg("band"), py::arg("bins") = 256);
  m.def("entropy_report",
        [](const Array& x, std::size_t bins) {
          const EntropyReport r = entropy_report(to_map(x), bins);
          py::dict d;
          for (std::size_t i = 0; i < 4; ++i) {
            py::dict band;
            band["normalized_entropy"] = r.entropy[i];
            band["energy_share"] = r.energy_share[i];
            d[kBandNames[i]] = band;
          }
          d["samples"] = r.samples;
          d["bins"] = r.bins;
          return d;
        },
        py::arg("x"), py::arg("bins") = 256);

  m.def("synth_pair",
        [](const std::string& kind, std::size_t height, std::size_t width,
           std::uint64_t seed, std::size_t rgb_channels, std::size_t ir_channels) {
          auto [rgb, ir] = synth_pair(parse_synth_kind(kind), height, width, seed,
                                      rgb_channels, ir_channels);
          return py::make_tuple(to_array(rgb), to_array(ir));
        },
        py::arg("kind"), py::arg("height"), py::arg("width"), py::arg("seed") = 0,
        py::arg("rgb_channels") = 1, py::arg("ir_channels") = 1);

  m.def("_plan_shapes",
        [](const std::string& config_json) {
          const RunConfig cfg = parse_run_config(nlohmann::json::parse(config_json));
          const ShapePlan plan = plan_shapes(cfg.pipeline);
          py::list bands, pyramid;
          for (const auto& s : plan.level_bands) bands.append(shape_dict(s));
          for (const auto& s : plan.pyramid) pyramid.append(shape_dict(s));
          py::dict d;
          d["level_bands"] = bands;
          d["pyramid"] = pyramid;
          return d;
        },
        py::arg("config_json"));
  m.def("_wave_forward",
        [](const Array& rgb, const Array& ir, const std::string& config_json) {
          const RunConfig cfg = parse_run_config(nlohmann::json::parse(config_json));
          const FeatureMap a = to_map(rgb);
          const FeatureMap b = to_map(ir);
          PyramidOutput out;
          {
            py::gil_scoped_release release;
            const PipelineWeights w = PipelineWeights::random(cfg.pipeline);
            out = wave_forward(a, b, w, cfg.pipeline);
          }
          py::list maps;
          for (const auto& p : out.maps) maps.append(to_array(p));
          return maps;
        },
        py::arg("rgb"), py::arg("ir"), py::arg("config_json"));
  m.def("_compare_strategies",
        [](const std::vector<std::pair<Array, Array>>& pairs, const std::string& config_json) {
          const RunConfig cfg = parse_run_config(nlohmann::json::parse(config_json), {}, false);
          std::vector<std::pair<FeatureMap, FeatureMap>> maps;
          for (const auto& [a, b] : pairs) maps.emplace_back(to_map(a), to_map(b));
          if (maps.empty()) throw Error("compare_strategies: no input pairs");
          Rng rng(cfg.pipeline.seed);
          WmfbWeights w = WmfbWeights::random({maps.front().first.channels(),
                                               cfg.pipeline.expand, cfg.pipeline.d_state,
                                               cfg.pipeline.shared_scan,
                                               cfg.pipeline.swap_fraction},
                                              rng);
          w.set_aggregation(cfg.pipeline.ss2d_aggregation);
          const StrategyMatrix matrix = compare_strategies(
              maps, w, CompareConfig{cfg.strategies, cfg.bins, cfg.pipeline.fusion.tie});
          py::list rows;
          for (const auto& r : matrix.rows) {
            py::dict d;
            d["strategy"] = r.strategy.label();
            d["key"] = r.strategy.key();
            d["high_entropy"] = r.mean.high_entropy;
            d["high_energy"] = r.mean.high_energy;
            d["low_energy"] = r.mean.low_energy;
            d["detail_retention"] = r.mean.detail_retention;
            rows.append(d);
          }
          return rows;
        },
        py::arg("pairs"), py::arg("config_json"));

  m.def("read_tensor",
        [](const std::filesystem::path& path) {
          const Tensor t = read_tensor(path);
          std::vector<py::ssize_t> dims(t.dims.begin(), t.dims.end());
          Array out(dims);
          std::copy(t.data.begin(), t.data.end(), out.mutable_data());
          return out;
        },
        py::arg("path"));
  m.def("write_tensor",
        [](const std::filesystem::path& path, const Array& a) {
          Tensor t;
          for (py::ssize_t i = 0; i < a.ndim(); ++i) {
            t.dims.push_back(static_cast<std::uint32_t>(a.shape(i)));
          }
          t.data.assign(a.data(), a.data() + a.size());
          write_tensor(path, t);
        },
        py::arg("path"), py::arg("array"));
}
