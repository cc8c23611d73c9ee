#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tjgen/bench.hpp"
#include "tjgen/error.hpp"
#include "tjgen/features.hpp"
#include "tjgen/generate.hpp"
#include "tjgen/insert.hpp"
#include "tjgen/validate.hpp"

namespace py = pybind11;
using namespace tjgen;

namespace {

std::vector<std::string> names(const Netlist& n, std::span<const NetId> ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (NetId id : ids) out.push_back(n.net(id).name);
  return out;
}

TriggerCondition to_condition(const std::vector<std::pair<std::string, bool>>& cond) {
  TriggerCondition out;
  for (const auto& [net, value] : cond) out.push_back({net, value});
  return out;
}

py::dict witness_dict(const Witness& w) {
  py::dict d;
  d["inputs"] = w.inputs;
  d["state"] = w.state;
  return d;
}

py::dict verify_dict(const VerifyReport& r) {
  py::dict d;
  d["passed"] = r.passed();
  d["compared"] = r.compared;
  d["mismatches"] = r.mismatches;
  d["excluded"] = r.excluded;
  d["acyclic"] = r.acyclic;
  d["activation_found"] = r.activation_found;
  d["activation_replayed"] = r.activation_replayed;
  d["activation_cycle"] = r.activation_cycle;
  d["differing_outputs"] = r.differing_outputs;
  d["witness"] = witness_dict(r.witness);
  d["detail"] = r.detail;
  return d;
}

py::dict ledger_dict(const PoolLedger& l) {
  py::dict d;
  d["target"] = l.target;
  d["sets_enumerated"] = l.sets_enumerated;
  d["unsat"] = l.unsat;
  d["dead_candidates"] = l.dead_candidates;
  d["prefixes_pruned"] = l.prefixes_pruned;
  d["no_payload"] = l.no_payload;
  d["virtual_evaluated"] = l.virtual_evaluated;
  d["verification_failed"] = l.verification_failed;
  d["exhausted"] = l.exhausted;
  return d;
}

template <std::size_t N>
py::array_t<double> matrix(const std::vector<std::array<double, N>>& rows) {
  py::array_t<double> a({rows.size(), N});
  auto m = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < N; ++j) m(i, j) = rows[i][j];
  }
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gate-level Trojan analysis and insertion";

  // Library errors carry their contract name in `code`.
  static py::handle error_type = py::exception<Error>(m, "TjgenError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<Netlist>(m, "Netlist")
      .def_property_readonly("name", &Netlist::module_name)
      .def_property_readonly("nets", [](const Netlist& n) {
        std::vector<std::string> out;
        for (const Net& net : n.nets()) out.push_back(net.name);
        return out;
      })
      .def_property_readonly("inputs", [](const Netlist& n) { return names(n, n.primary_inputs()); })
      .def_property_readonly("outputs", [](const Netlist& n) { return names(n, n.primary_outputs()); })
      .def_property_readonly("num_cells", [](const Netlist& n) { return n.cells().size(); })
      .def_property_readonly("is_sequential", &Netlist::is_sequential)
      .def("net_id", &Netlist::net_id)
      .def("to_verilog", [](const Netlist& n) { return emit_netlist(n); })
      .def("__repr__", [](const Netlist& n) {
        return "<Netlist " + n.module_name() + ": " + std::to_string(n.cells().size()) + " cells, " +
               std::to_string(n.nets().size()) + " nets>";
      });

  m.def("parse_netlist", [](const std::string& text) { return parse_netlist(text); }, py::arg("text"));
  m.def("read_netlist", [](const std::string& path) { return read_netlist_file(path); }, py::arg("path"));
  m.def(
      "generate_netlist",
      [](int gates, int inputs, double dff_fraction, std::uint64_t seed, const std::string& name) {
        GeneratorParams p;
        p.gates = gates;
        p.inputs = inputs > 0 ? inputs : std::max(2, gates / 10);
        p.dff_fraction = dff_fraction;
        p.seed = seed;
        p.name = name;
        return generate_netlist(p);
      },
      py::arg("gates") = 400, py::arg("inputs") = 0, py::arg("dff_fraction") = 0.0, py::arg("seed") = 1,
      py::arg("name") = "syn");

  m.def("feature_names", [] { return std::vector<std::string>(net_feature_names().begin(), net_feature_names().end()); });
  m.def("trojan_feature_names",
        [] { return std::vector<std::string>(trojan_feature_names().begin(), trojan_feature_names().end()); });
  m.def(
      "extract_features",
      [](const Netlist& n, std::size_t vectors, std::uint64_t seed, bool structural) {
        return matrix(extract_features(n, {.vectors = vectors, .seed = seed, .structural = structural}).rows);
      },
      py::arg("netlist"), py::arg("vectors") = 100000, py::arg("seed") = 1, py::arg("structural") = true,
      "Feature matrix, one row per net in Netlist.nets order.");
  m.def(
      "simulate",
      [](const Netlist& n, std::size_t vectors, std::uint64_t seed) {
        std::vector<std::array<double, 2>> rows;
        for (const auto& s : simulate(n, vectors, seed)) rows.push_back({s.probability, s.toggle_rate});
        return matrix(rows);
      },
      py::arg("netlist"), py::arg("vectors") = 100000, py::arg("seed") = 1,
      "Columns: probability of 1, toggle rate.");
  m.def(
      "scoap",
      [](const Netlist& n) {
        std::vector<std::array<double, 3>> rows;
        for (const auto& s : scoap(n)) rows.push_back({s.cc0, s.cc1, s.co});
        return matrix(rows);
      },
      py::arg("netlist"), "Columns: CC0, CC1, CO.");

  m.def(
      "justify",
      [](const Netlist& n, const std::vector<std::pair<std::string, bool>>& cond, double timeout) {
        const Justification j = justify(n, to_condition(cond), {.timeout_seconds = timeout});
        py::dict d;
        d["status"] = std::string(to_string(j.status));
        d["witness"] = witness_dict(j.witness);
        return d;
      },
      py::arg("netlist"), py::arg("condition"), py::arg("timeout") = 10.0);
  m.def(
      "verify_inserted",
      [](const Netlist& original, const Netlist& modified, const std::vector<std::pair<std::string, bool>>& cond,
         std::size_t vectors, std::uint64_t seed, std::optional<std::string> trigger_net) {
        VerifyOptions o;
        o.vectors = vectors;
        o.seed = seed;
        o.trigger_net = std::move(trigger_net);
        return verify_dict(verify_inserted(original, modified, to_condition(cond), o));
      },
      py::arg("original"), py::arg("modified"), py::arg("condition"), py::arg("vectors") = 10000,
      py::arg("seed") = 1, py::arg("trigger_net") = py::none());

  py::class_<TrojanTemplate>(m, "Template")
      .def_readonly("template_id", &TrojanTemplate::template_id)
      .def_readonly("trigger_ports", &TrojanTemplate::trigger_ports)
      .def_readonly("final_trigger_net", &TrojanTemplate::final_trigger_net)
      .def_property_readonly("r", &TrojanTemplate::r)
      .def_property_readonly("sequential", [](const TrojanTemplate& t) { return t.kind == TemplateKind::Sequential; });
  m.def("template_ids", [] { return std::vector<std::string>(builtin_template_ids().begin(), builtin_template_ids().end()); });
  m.def("load_template", &resolve_template, py::arg("id_or_path"));

  py::class_<InsertedTrojan>(m, "Trojan")
      .def_readonly("netlist", &InsertedTrojan::netlist)
      .def_property_readonly("report_json", [](const InsertedTrojan& t) { return report_json(t.report); })
      .def_property_readonly("trigger_nets", [](const InsertedTrojan& t) { return t.report.binding.trigger_nets; })
      .def_property_readonly("values", [](const InsertedTrojan& t) { return t.report.binding.values; })
      .def_property_readonly("payload_net", [](const InsertedTrojan& t) { return t.report.binding.payload_net; })
      .def_property_readonly("final_trigger_net", [](const InsertedTrojan& t) { return t.report.final_trigger_net; })
      .def_property_readonly("condition", [](const InsertedTrojan& t) {
        std::vector<std::pair<std::string, bool>> out;
        for (const auto& c : t.report.binding.condition()) out.emplace_back(c.net, c.value);
        return out;
      })
      .def_property_readonly("verification", [](const InsertedTrojan& t) { return verify_dict(t.report.verification); });

  m.def(
      "baseline_insert",
      [](const Netlist& host, const TrojanTemplate& t, double theta, std::size_t count, std::uint64_t seed,
         std::size_t vectors, std::size_t verify_vectors) {
        BaselineConfig c;
        c.theta = theta;
        c.count = count;
        c.seed = seed;
        c.vectors = vectors;
        c.verify_vectors = verify_vectors;
        py::gil_scoped_release release;
        return baseline_insert(host, t, c).trojans;
      },
      py::arg("host"), py::arg("template"), py::arg("theta") = 0.01, py::arg("count") = 100, py::arg("seed") = 1,
      py::arg("vectors") = 100000, py::arg("verify_vectors") = 10000);

  m.def(
      "train",
      [](const std::vector<InsertedTrojan>& trojans, std::size_t vectors, std::uint64_t seed, int trees,
         bool functional_only) {
        TrainingConfig c;
        c.vectors = vectors;
        c.seed = seed;
        c.forest.trees = trees;
        c.functional_only = functional_only;
        TrainingSet s = [&] {
          py::gil_scoped_release release;
          return build_training_set(trojans, c);
        }();
        std::vector<std::string> bundles;
        for (const auto& b : s.bundles) bundles.push_back(bundle_to_json(b));
        py::dict d;
        d["bundles"] = bundles;
        d["clusters"] = clusters_to_json(s);
        d["labels"] = s.clustering.labels;
        d["warnings"] = s.warnings;
        return d;
      },
      py::arg("trojans"), py::arg("vectors") = 100000, py::arg("seed") = 1, py::arg("trees") = 100,
      py::arg("functional_only") = false,
      "Clusters the Trojans and trains one model bundle (JSON text) per cluster.");

  m.def(
      "insert_trojans",
      [](const Netlist& host, const TrojanTemplate& t, const std::string& bundle, std::size_t num,
         std::uint64_t seed, std::size_t vectors, std::size_t verify_vectors, std::size_t pool_factor,
         const std::string& selection, bool sort_pool) {
        InsertionConfig c;
        c.num_trojans = num;
        c.seed = seed;
        c.vectors = vectors;
        c.verify_vectors = verify_vectors;
        c.virtual_pool_factor = pool_factor;
        if (selection == "random") {
          c.selection = Selection::Random;
        } else if (selection != "model") {
          throw Error(ErrorCode::InvalidArgument, "selection must be model or random");
        }
        c.sort_pool = sort_pool;
        const ModelBundle b = bundle_from_json(bundle);
        InsertionResult r = [&] {
          py::gil_scoped_release release;
          return insert_trojans(host, t, b, c);
        }();
        py::dict d;
        d["trojans"] = std::move(r.trojans);
        d["ledger"] = ledger_dict(r.ledger);
        d["shortfall"] = r.shortfall;
        std::vector<double> distances;
        for (const auto& v : r.pool) distances.push_back(v.distance);
        d["pool_distances"] = distances;
        return d;
      },
      py::arg("host"), py::arg("template"), py::arg("bundle"), py::arg("num") = 1, py::arg("seed") = 1,
      py::arg("vectors") = 100000, py::arg("verify_vectors") = 10000, py::arg("pool_factor") = 20,
      py::arg("selection") = "model", py::arg("sort_pool") = true);
}
