#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "trialpower/config.hpp"
#include "trialpower/dataset_io.hpp"
#include "trialpower/error.hpp"
#include "trialpower/inference.hpp"
#include "trialpower/power.hpp"
#include "trialpower/report.hpp"
#include "trialpower/simgen.hpp"

namespace py = pybind11;
using namespace trialpower;

namespace {

std::vector<SurvivalObservation> to_observations(const std::vector<std::pair<int, bool>>& pairs) {
    std::vector<SurvivalObservation> out;
    out.reserve(pairs.size());
    for (const auto& [time, event] : pairs) out.push_back({time, event});
    return out;
}

ScenarioConfig resolve(const std::string& preset, std::optional<double> baseline_offset,
                       std::optional<int> n_per_arm) {
    ScenarioConfig config = preset_config(preset);
    if (baseline_offset) config.params.baseline_offset = *baseline_offset;
    if (n_per_arm) {
        config.params.n_per_arm = *n_per_arm;
        config.po.n_per_arm = *n_per_arm;
    }
    config.validate();
    return config;
}

TrialDataset simulate(const std::string& preset, std::uint64_t seed, std::optional<double> baseline_offset,
                      std::optional<int> n_per_arm, std::uint32_t replicate) {
    const ScenarioConfig config = resolve(preset, baseline_offset, n_per_arm);
    const Scenario scenario = config.scenario();
    if (const auto* po = std::get_if<POScenarioParams>(&scenario)) return gen_trial_po(*po, seed, replicate);
    return gen_trial_eq1(std::get<ScenarioParams>(scenario), seed, replicate);
}

std::string report_csv(const PowerTable& table) {
    std::ostringstream out;
    write_report(table, out, ReportFormat::csv);
    return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Ordinal-outcome trial simulation, endpoint tests and power estimation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<DegenerateInput>(m, "DegenerateInput", PyExc_ValueError);
    py::register_exception<UndefinedValue>(m, "UndefinedValue", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

    m.attr("CALIBRATED_BASELINE_OFFSET") = kCalibratedBaselineOffset;

    py::enum_<Arm>(m, "Arm").value("control", Arm::control).value("treatment", Arm::treatment);

    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init([](std::string id, Arm arm, std::vector<std::optional<int>> scores, int categories) {
                 return Trajectory(std::move(id), arm, scores, categories);
             }),
             py::arg("subject_id"), py::arg("arm"), py::arg("scores"), py::arg("categories") = kDefaultCategories)
        .def_property_readonly("subject_id", &Trajectory::subject_id)
        .def_property_readonly("arm", &Trajectory::arm)
        .def_property_readonly("horizon_days", &Trajectory::horizon_days)
        .def_property_readonly("last_observed_day", &Trajectory::last_observed_day)
        .def_property_readonly("death_day", &Trajectory::death_day)
        .def_property_readonly("scores", [](const Trajectory& t) {
            std::vector<std::optional<int>> out;
            for (int d = 1; d <= t.horizon_days(); ++d) out.push_back(t.at(d));
            return out;
        });

    py::class_<TrialDataset>(m, "TrialDataset")
        .def_readonly("trajectories", &TrialDataset::trajectories)
        .def_readonly("horizon_days", &TrialDataset::horizon_days)
        .def_readonly("categories", &TrialDataset::categories)
        .def_readonly("recovery_threshold", &TrialDataset::recovery_threshold)
        .def("arm_size", &TrialDataset::arm_size)
        .def("__len__", [](const TrialDataset& d) { return d.trajectories.size(); })
        .def("to_csv", [](const TrialDataset& d) {
            std::ostringstream out;
            write_dataset(d, out);
            return out.str();
        });

    py::class_<TestResult>(m, "TestResult")
        .def_readonly("method", &TestResult::method)
        .def_readonly("estimate", &TestResult::estimate)
        .def_readonly("ci_low", &TestResult::ci_low)
        .def_readonly("ci_high", &TestResult::ci_high)
        .def_readonly("statistic", &TestResult::statistic)
        .def_readonly("p_value", &TestResult::p_value)
        .def_readonly("n_used", &TestResult::n_used)
        .def_readonly("day", &TestResult::day)
        .def_readonly("converged", &TestResult::converged)
        .def_readonly("diagnostic", &TestResult::diagnostic)
        .def_readonly("wald_p_value", &TestResult::wald_p_value)
        .def("__repr__", [](const TestResult& r) {
            return "<TestResult " + r.method + " estimate=" + format_real(r.estimate) +
                   " p=" + format_real(r.p_value) + ">";
        });

    py::class_<PowerRow>(m, "PowerRow")
        .def_property_readonly("method", [](const PowerRow& r) { return r.method.label(); })
        .def_readonly("rejection_rate", &PowerRow::rejection_rate)
        .def_readonly("mc_se", &PowerRow::mc_se)
        .def_readonly("n_sims", &PowerRow::n_sims)
        .def_readonly("n_degenerate", &PowerRow::n_degenerate);

    py::class_<PowerTable>(m, "PowerTable")
        .def_readonly("rows", &PowerTable::rows)
        .def("as_dict", [](const PowerTable& t) {
            py::dict out;
            for (const auto& r : t.rows) out[py::str(r.method.label())] = r.rejection_rate;
            return out;
        })
        .def("to_csv", &report_csv);

    py::class_<SampleSize>(m, "SampleSize")
        .def_readonly("events_required", &SampleSize::events_required)
        .def_readonly("total_n", &SampleSize::total_n);

    m.def("presets", &preset_names);
    m.def("simulate", &simulate, py::arg("preset") = "reference", py::arg("seed"),
          py::arg("baseline_offset") = py::none(), py::arg("n_per_arm") = py::none(), py::arg("replicate") = 0,
          "Generate one trial from a named scenario");
    m.def(
        "run_power",
        [](const std::string& preset, std::uint64_t seed, int sims, std::optional<std::string> methods,
           std::optional<double> baseline_offset, std::optional<int> n_per_arm, int workers) {
            const ScenarioConfig config = resolve(preset, baseline_offset, n_per_arm);
            const auto specs = methods ? parse_method_list(*methods, config.alpha) : config.methods;
            py::gil_scoped_release release;
            return run_power_study(config.scenario(), specs, sims, seed, workers);
        },
        py::arg("preset") = "reference", py::arg("seed"), py::arg("sims") = 1000, py::arg("methods") = py::none(),
        py::arg("baseline_offset") = py::none(), py::arg("n_per_arm") = py::none(), py::arg("workers") = 1,
        "Monte Carlo power for a named scenario");
    m.def(
        "resample_power",
        [](const TrialDataset& dataset, int n_per_arm, int reps, const std::string& methods, std::uint64_t seed,
           int workers) {
            const auto specs = parse_method_list(methods);
            py::gil_scoped_release release;
            return resample_power(dataset, n_per_arm, reps, specs, seed, workers);
        },
        py::arg("dataset"), py::arg("n_per_arm"), py::arg("reps"), py::arg("methods"), py::arg("seed"),
        py::arg("workers") = 1);
    m.def("load_dataset", [](const std::string& path) { return load_dataset(path).dataset; });
    m.def("save_dataset", &save_dataset);
    m.def("augment_dataset", &augment_dataset);
    m.def(
        "analysis_panel",
        [](const TrialDataset& dataset, std::vector<int> days) { return analysis_panel(dataset, days); },
        py::arg("dataset"), py::arg("days") = std::vector<int>{7, 14, 21, 28});

    m.def(
        "proportional_odds",
        [](const std::vector<int>& treatment, const std::vector<int>& control) {
            return fit_proportional_odds(treatment, control);
        },
        py::arg("treatment"), py::arg("control"));
    m.def(
        "wilcoxon_rank_sum",
        [](const std::vector<double>& x, const std::vector<double>& y) { return wilcoxon_rank_sum(x, y); });
    m.def(
        "t_test",
        [](const std::vector<double>& x, const std::vector<double>& y, bool pooled) { return t_test(x, y, pooled); },
        py::arg("x"), py::arg("y"), py::arg("pooled") = false);
    m.def("two_proportion_test", &two_proportion_test);
    m.def("fisher_exact", &fisher_exact);
    m.def(
        "log_rank",
        [](const std::vector<std::pair<int, bool>>& treatment, const std::vector<std::pair<int, bool>>& control) {
            return log_rank(to_observations(treatment), to_observations(control));
        },
        "Each observation is (time, event)");
    m.def(
        "cox_fit",
        [](const std::vector<std::pair<int, bool>>& treatment, const std::vector<std::pair<int, bool>>& control,
           const std::string& ties) {
            CoxFitOptions options;
            if (ties == "breslow") {
                options.ties = CoxTies::breslow;
            } else if (ties != "efron") {
                throw InvalidArgument("ties must be 'efron' or 'breslow'");
            }
            return cox_fit(to_observations(treatment), to_observations(control), options);
        },
        py::arg("treatment"), py::arg("control"), py::arg("ties") = "efron");
    m.def("schoenfeld_sample_size", &schoenfeld_sample_size, py::arg("hazard_ratio"), py::arg("alpha") = 0.05,
          py::arg("power") = 0.85, py::arg("event_probability") = 0.10, py::arg("allocation_ratio") = 1.0);
}
