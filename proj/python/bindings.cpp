#include <optional>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rwre/analytics.hpp"
#include "rwre/cli.hpp"
#include "rwre/env.hpp"
#include "rwre/harness.hpp"
#include "rwre/numeric.hpp"
#include "rwre/oracle.hpp"

namespace py = pybind11;
using namespace rwre;

namespace {

env::EnvironmentModel model_from_json(const std::string& text) {
  return cli::parse_model(cli::parse_json_text(text, "model"));
}

env::EnvironmentWindow window_from(std::int64_t lo, std::vector<double> p) {
  return env::EnvironmentWindow(lo, std::move(p), "python", 0);
}

py::dict site_dict(const analytics::SiteAnalytics& s) {
  py::dict d;
  d["k"] = s.k;
  d["A"] = s.A;
  d["mu"] = s.mu;
  d["mu_trunc_bound"] = s.mu_trunc_bound;
  d["mu_terms"] = s.mu_terms;
  d["mu_recursion"] = s.mu_recursion;
  d["sigma2"] = s.sigma2;
  d["sigma2_trunc_bound"] = s.sigma2_trunc_bound;
  d["sigma2_terms"] = s.sigma2_terms;
  d["sigma2_recursion"] = s.sigma2_recursion;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quenched random walk in random environment";
  m.attr("__version__") = cli::kToolVersion;

  static py::exception<Error> base(m, "RwreError");
  static py::exception<Error> config_error(m, "ConfigError", base.ptr());
  static py::exception<Error> eligibility_error(m, "EligibilityError", base.ptr());
  static py::exception<Error> convergence_error(m, "NonConvergenceError", base.ptr());
  static py::exception<Error> guard_error(m, "GuardBreachError", base.ptr());
  static py::exception<Error> domain_error(m, "DomainError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.error_class()) {
        case ErrorClass::kConfig: py::set_error(config_error, e.what()); return;
        case ErrorClass::kEligibility: py::set_error(eligibility_error, e.what()); return;
        case ErrorClass::kNonConvergence: py::set_error(convergence_error, e.what()); return;
        case ErrorClass::kGuardBreach: py::set_error(guard_error, e.what()); return;
        case ErrorClass::kDomain: py::set_error(domain_error, e.what()); return;
      }
      py::set_error(base, e.what());
    }
  });

  py::class_<env::EnvironmentModel>(m, "Model")
      .def(py::init(&model_from_json), py::arg("json"))
      .def_static("constant", [](double p) { return env::EnvironmentModel(env::Constant{p}); }, py::arg("p"))
      .def_static("two_point", &env::two_point_model)
      .def_static("golden_ratio", &env::golden_ratio_model)
      .def_static("zero_speed", &env::zero_speed_model)
      .def_property_readonly("id", &env::EnvironmentModel::id)
      .def_property_readonly("warnings", &env::EnvironmentModel::warnings)
      .def("to_json", [](const env::EnvironmentModel& model) { return cli::model_to_json(model).dump(); })
      .def("__repr__", [](const env::EnvironmentModel& model) { return "Model(" + model.id() + ")"; });

  m.def("realize",
        [](const env::EnvironmentModel& model, std::int64_t lo, std::int64_t hi, std::uint64_t seed) {
          const auto w = env::realize(model, lo, hi, seed);
          return std::vector<double>(w.values().begin(), w.values().end());
        },
        py::arg("model"), py::arg("lo"), py::arg("hi"), py::arg("seed"));

  m.def("lyapunov",
        [](const env::EnvironmentModel& model) {
          const auto e = env::lambda(model);
          return py::make_tuple(e.value, e.std_error, env::to_string(e.method));
        },
        py::arg("model"), "lambda = E ln A as (value, std_error, method)");

  m.def("classify", [](const env::EnvironmentModel& model) { return env::to_string(env::classify(model).regime); },
        py::arg("model"));

  m.def("r_kappa",
        [](const env::EnvironmentModel& model, double kappa, double gamma) {
          return env::r_kappa(model, kappa, gamma).value;
        },
        py::arg("model"), py::arg("kappa"), py::arg("gamma") = env::kDefaultGamma);

  m.def("conditions_json",
        [](const env::EnvironmentModel& model, double gamma) {
          return cli::to_json(env::check_conditions(model, gamma)).dump();
        },
        py::arg("model"), py::arg("gamma") = env::kDefaultGamma);

  m.def("summary_json",
        [](const env::EnvironmentModel& model, std::int64_t sites, std::uint64_t seed) {
          return cli::to_json(analytics::summary(model, {sites, seed})).dump();
        },
        py::arg("model"), py::arg("sites") = 1'000'000, py::arg("seed") = 0x5EED);

  m.def("site_moments",
        [](std::int64_t lo, std::vector<double> p, std::int64_t k) {
          return site_dict(analytics::sigma2_site(window_from(lo, std::move(p)), k));
        },
        py::arg("lo"), py::arg("p"), py::arg("k"), "mu_k and sigma_k^2 from their series over an explicit window");

  m.def("oracle_increments",
        [](std::int64_t lo, std::vector<double> p, std::int64_t a, std::int64_t n) {
          const auto w = window_from(lo, std::move(p));
          const auto e = oracle::expected_hitting(w, a, n);
          const auto v = oracle::variance_hitting(w, a, n);
          return py::make_tuple(e.increments, v.increments);
        },
        py::arg("lo"), py::arg("p"), py::arg("a"), py::arg("n"),
        "e(k) - e(k+1) and v(k) - v(k+1) for k in [a, n) from the finite-interval solves");

  m.def("ks_normal",
        [](std::vector<double> samples) { return harness::ks_distance(std::move(samples), numeric::normal_cdf); },
        py::arg("samples"));

  m.def("execute",
        [](const std::string& command, const std::string& config_json, std::optional<std::uint64_t> seed,
           std::optional<unsigned> workers) {
          cli::RunOptions opts;
          opts.command = command;
          opts.seed = seed;
          opts.workers = workers;
          const auto rc = cli::resolve_config(cli::parse_json_text(config_json, "config"), opts);
          cli::CommandResult r;
          {
            py::gil_scoped_release release;
            r = cli::execute(command, rc);
          }
          return py::make_tuple(r.report.dump(), r.samples.render(), r.cdf.render());
        },
        py::arg("command"), py::arg("config_json"), py::arg("seed") = py::none(), py::arg("workers") = py::none(),
        "Runs a subcommand in memory; returns (report json, samples csv, cdf csv)");

  m.def("run",
        [](const std::string& command, const std::string& config_path, const std::string& out_dir,
           std::optional<std::uint64_t> seed, std::optional<unsigned> workers) {
          cli::RunOptions opts;
          opts.command = command;
          opts.config_path = config_path;
          opts.out_dir = out_dir;
          opts.seed = seed;
          opts.workers = workers;
          py::gil_scoped_release release;
          std::ostringstream out, err;
          return cli::run(opts, out, err);
        },
        py::arg("command"), py::arg("config_path"), py::arg("out_dir"), py::arg("seed") = py::none(),
        py::arg("workers") = py::none(), "Same as the rwre executable; returns the exit code");
}
