#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "passforge/baselines.hpp"
#include "passforge/circuit_io.hpp"
#include "passforge/commands.hpp"
#include "passforge/generators.hpp"
#include "passforge/ppo.hpp"
#include "passforge/simulator.hpp"

namespace py = pybind11;
using namespace passforge;

namespace {

py::dict report_dict(const QualityReport& r) {
  py::dict d;
  d["esp"] = r.esp;
  d["gates_1q"] = r.gate_counts.one_qubit;
  d["gates_2q"] = r.gate_counts.two_qubit;
  d["depth"] = r.depth;
  d["duration"] = r.duration_estimate;
  return d;
}

py::dict result_dict(const CompileResult& r) {
  py::dict d = report_dict(r.report);
  d["circuit"] = r.circuit;
  d["layout"] = r.layout;
  d["compile_seconds"] = r.compile_seconds;
  d["trace"] = r.trace;
  return d;
}

std::map<std::string, double> dist_dict(const Distribution& p) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : p.probs) out[p.bitstring(k)] = v;
  return out;
}

std::vector<PassId> toggles_from(const std::vector<std::string>& names) {
  std::vector<PassId> out;
  for (const auto& n : names) {
    const auto id = pass_from_name(n);
    if (!id) throw ValidationError("unknown pass " + n);
    out.push_back(*id);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_passforge, m) {
  m.doc() = "Pass-selection compiler core";
  // Translators run newest first, so the base class goes in first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);

  py::class_<QuantumCircuit>(m, "Circuit")
      .def_property_readonly("num_qubits", &QuantumCircuit::num_qubits)
      .def_property_readonly("num_clbits", &QuantumCircuit::num_clbits)
      .def("__len__", &QuantumCircuit::size)
      .def("qasm", [](const QuantumCircuit& c) { return serialize_qasm_subset(c); })
      .def("ideal_distribution", [](const QuantumCircuit& c) { return dist_dict(ideal_distribution(c)); });

  py::class_<Layout>(m, "Layout")
      .def_readonly("initial", &Layout::initial)
      .def_readonly("final", &Layout::final);

  py::class_<BackendModel>(m, "Backend")
      .def_property_readonly("name", &BackendModel::name)
      .def_property_readonly("num_qubits", &BackendModel::num_physical)
      .def_property_readonly("edges", &BackendModel::edges);

  m.def("parse_qasm", [](const std::string& text) { return parse_qasm_subset(text); });
  m.def("load_circuit", &load_circuit_file);
  m.def("random_circuit", &random_circuit, py::arg("num_qubits"), py::arg("depth"), py::arg("seed"));
  m.def("benchmark_circuit", [](const std::string& kind, int n) { return benchmark_circuit(benchmark_kind_from_string(kind), n); });
  m.def("load_backend", &load_calibration);
  m.def(
      "synthetic_backend",
      [](const std::string& topology, int n, std::optional<std::uint64_t> noise_seed) {
        if (noise_seed) return synthetic_backend(topology_from_string(topology), n, HeterogeneousNoise{*noise_seed, 0.5, {}});
        return synthetic_backend(topology_from_string(topology), n, UniformNoise{});
      },
      py::arg("topology"), py::arg("num_qubits"), py::arg("noise_seed") = std::nullopt);

  m.def("pass_names", [] {
    std::vector<std::string> out;
    for (const auto& p : pass_catalog()) out.emplace_back(p.name);
    return out;
  });
  m.def("fixed_pipeline", [](const std::string& kind, const QuantumCircuit& c, const BackendModel& b) {
    if (kind != "fidelity" && kind != "time") throw ValidationError("kind must be 'fidelity' or 'time'");
    return result_dict(fixed_pipeline(kind == "fidelity" ? FixedPipeline::FidelityOptimized : FixedPipeline::TimeOptimized, c, b));
  });
  m.def(
      "brute_force",
      [](const QuantumCircuit& c, const BackendModel& b, std::optional<std::vector<std::string>> toggles) {
        const auto ids = toggles ? toggles_from(*toggles) : default_toggles();
        const auto bf = brute_force_selective(c, b, ids);
        std::vector<double> esps;
        for (const auto& r : bf.rows) esps.push_back(r.report.esp);
        py::dict d;
        d["esp"] = esps;
        d["best_mask"] = bf.best_mask;
        d["all_on"] = bf.all_on();
        return d;
      },
      py::arg("circuit"), py::arg("backend"), py::arg("toggles") = std::nullopt);
  m.def("random_select", [](const QuantumCircuit& c, const BackendModel& b, std::uint64_t seed) {
    EnvConfig e;
    e.use_reference = false;
    return result_dict(random_select(c, b, seed, e));
  });
  m.def("greedy_select", [](const QuantumCircuit& c, const BackendModel& b) {
    EnvConfig e;
    e.use_reference = false;
    return result_dict(greedy_select(c, b, e));
  });
  m.def(
      "noisy_tvd",
      [](const QuantumCircuit& logical, const QuantumCircuit& compiled, const Layout& layout, const BackendModel& b,
         double noise_scale, int shots, std::uint64_t seed) {
        NoiseConfig nc;
        nc.noise_scale = noise_scale;
        nc.shots = shots;
        nc.seed = seed;
        return tvd(ideal_distribution(logical), noisy_distribution(compiled, b, layout, nc));
      },
      py::arg("logical"), py::arg("compiled"), py::arg("layout"), py::arg("backend"), py::arg("noise_scale") = 1.0,
      py::arg("shots") = 4096, py::arg("seed") = 0);
  m.def("soft_normalize", &soft_normalize);
  m.def(
      "compute_gae",
      [](const std::vector<double>& r, const std::vector<double>& v, const std::vector<bool>& d, double gamma,
         double lambda, double last) {
        const auto g = compute_gae(r, v, d, gamma, lambda, last);
        return py::make_tuple(g.advantages, g.returns);
      },
      py::arg("rewards"), py::arg("values"), py::arg("dones"), py::arg("gamma") = 0.99, py::arg("lam") = 0.95,
      py::arg("last_value") = 0.0);

  py::class_<CompilationEnv>(m, "Env")
      .def(py::init([](bool use_reference) {
             EnvConfig e;
             e.use_reference = use_reference;
             return CompilationEnv(e);
           }),
           py::arg("use_reference") = false)
      .def("reset", [](CompilationEnv& env, const QuantumCircuit& c, const BackendModel& b) { env.reset(c, b); })
      .def("action_mask",
           [](const CompilationEnv& env) {
             std::vector<int> valid;
             const auto mask = env.action_mask();
             for (int a = 0; a < kNumActions; ++a) {
               if (mask.test(static_cast<std::size_t>(a))) valid.push_back(a);
             }
             return valid;
           })
      .def("step",
           [](CompilationEnv& env, int action) {
             const auto r = env.step(action);
             return py::make_tuple(r.reward, r.done);
           })
      .def_property_readonly("done", &CompilationEnv::done)
      .def_property_readonly("stage", [](const CompilationEnv& env) { return std::string(stage_name(env.stage())); })
      .def("final_report", [](const CompilationEnv& env) { return report_dict(env.final_report()); });
  m.attr("SKIP") = kSkipAction;

  m.def("run_command", [](const std::string& command, const std::string& config, std::optional<std::uint64_t> seed,
                          std::optional<std::string> out) {
    auto cfg = RunConfig::load(config);
    if (seed) cfg.set_seed(*seed);
    if (out) cfg.out = std::filesystem::absolute(*out).string();
    if (command == "train") return cmd_train(cfg);
    if (command == "compile") return cmd_compile(cfg);
    if (command == "eval") return cmd_eval(cfg);
    if (command == "bruteforce") return cmd_bruteforce(cfg);
    if (command == "bench") return cmd_bench(cfg);
    throw ValidationError("unknown command " + command);
  }, py::arg("command"), py::arg("config"), py::arg("seed") = std::nullopt, py::arg("out") = std::nullopt);
}
