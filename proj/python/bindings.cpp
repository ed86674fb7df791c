// Python bindings. Structured results cross the boundary as JSON text and are
// decoded on the Python side.

#include "peermarket/harness.hpp"
#include "peermarket/incentives.hpp"
#include "peermarket/msr.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
namespace pm = peermarket;

namespace {

py::dict receipt_dict(const pm::TradeReceipt& r)
{
    py::dict d;
    d["agent"] = r.agent;
    d["delta"] = r.delta;
    d["gross_cost"] = r.gross_cost;
    d["fee"] = r.fee;
    d["liquidated_shares"] = r.liquidated_shares;
    d["q_before"] = r.q_before;
    d["q_after"] = r.q_after;
    d["dominated"] = r.dominated;
    return d;
}

pm::BeliefModel beliefs(double mu0, double mu1, std::optional<double> mu)
{
    pm::BeliefModel bm{mu.value_or(0.5 * (mu0 + mu1)), mu1, mu0};
    bm.validate();
    return bm;
}

pm::CalibrationProblem problem(double delta, double budget, double total, const std::string& entry, double b)
{
    return {delta, budget, total, b, pm::entry_mode_from_string(entry)};
}

}  // namespace

PYBIND11_MODULE(_peermarket, m)
{
    m.doc() = "LMSR prediction market with peer-prediction arbitration";

    py::register_exception<pm::TradeRejected>(m, "TradeRejected", PyExc_ValueError);
    py::register_exception<pm::InfeasibleCalibration>(m, "InfeasibleCalibration", PyExc_ArithmeticError);
    py::register_exception<pm::ScenarioError>(m, "ScenarioError", PyExc_ValueError);

    // cost function
    m.def("cost", [](double b, double q) { return pm::Lmsr(b).cost(q); }, py::arg("b"), py::arg("q"));
    m.def("price", [](double b, double q) { return pm::Lmsr(b).price(q); }, py::arg("b"), py::arg("q"));
    m.def("trade_cost", [](double b, double q0, double q1) { return pm::trade_cost(pm::Lmsr(b), q0, q1); },
          py::arg("b"), py::arg("q_from"), py::arg("q_to"));
    m.def("price_bounds", [](double b, double f) {
        const pm::PriceBounds pb = pm::price_bound_shares(pm::Lmsr(b), pm::FeeSchedule(f));
        return py::make_tuple(pb.q_minus, pb.q_plus);
    }, py::arg("b"), py::arg("f"), "(q_minus, q_plus) beyond which no rational trade goes");
    m.def("phi_plus", [](double b, double f, double budget) {
        return pm::phi_plus(pm::Lmsr(b), pm::FeeSchedule(f), budget);
    }, py::arg("b"), py::arg("f"), py::arg("budget"));
    m.def("phi_minus", [](double b, double f, double budget) {
        return pm::phi_minus(pm::Lmsr(b), pm::FeeSchedule(f), budget);
    }, py::arg("b"), py::arg("f"), py::arg("budget"));
    m.def("phi_infinite", [](double f, double budget) { return pm::phi_infinite(pm::FeeSchedule(f), budget); },
          py::arg("f"), py::arg("budget"));

    py::class_<pm::Market>(m, "Market")
        .def(py::init([](double b, double f, const std::string& entry) {
                 return pm::open_market(b, f, pm::entry_mode_from_string(entry));
             }),
             py::arg("b"), py::arg("f"), py::arg("entry_mode") = "single")
        .def("register_agent", &pm::Market::register_agent, py::arg("id"), py::arg("budget"))
        .def("trade", [](pm::Market& mk, const std::string& id, double delta) {
            return receipt_dict(mk.execute_trade(id, delta));
        }, py::arg("id"), py::arg("delta"))
        .def("quote", [](const pm::Market& mk, const std::string& id, double delta) {
            return receipt_dict(mk.quote(id, delta));
        }, py::arg("id"), py::arg("delta"))
        .def("rational_trade", [](const pm::Market& mk, const std::string& id, double valuation) {
            return pm::rational_trade(mk, id, valuation);
        }, py::arg("id"), py::arg("valuation"))
        .def_property_readonly("q", &pm::Market::outstanding)
        .def_property_readonly("price", &pm::Market::price)
        .def_property_readonly("fee_revenue", &pm::Market::fee_revenue)
        .def_property_readonly("total_M", [](const pm::Market& mk) { return pm::total_M(mk.ledger()); })
        .def("_ledger_json", [](const pm::Market& mk) { return pm::ledger_snapshot(mk).dump(); });

    // arbitration
    m.def("derive_posteriors", [](double p_event, double s1, double s0) {
        const pm::BeliefModel bm = pm::derive_posteriors({p_event, s1, s0});
        return py::make_tuple(bm.mu, bm.mu1, bm.mu0);
    }, py::arg("p_event"), py::arg("p_signal_given_event"), py::arg("p_signal_given_no_event"),
       "(mu, mu1, mu0) for conditionally independent signals");
    m.def("fit_posteriors", [](double mu0, double mu1) {
        const pm::GenerativeModel g = pm::GenerativeModel::fit_posteriors(mu0, mu1);
        return py::make_tuple(g.p_event, g.p_signal_given_event, g.p_signal_given_no_event);
    }, py::arg("mu0"), py::arg("mu1"));
    m.def("peer_payment", &pm::peer_payment, py::arg("report"), py::arg("peer_report"), py::arg("k"), py::arg("c"));

    // incentives
    m.def("expected_payoff", [](double n, int arbiters, double k, double mu0, double mu1, int signal, int report,
                                std::optional<double> reference) {
        const pm::IncentiveQuery q{n, arbiters, k, beliefs(mu0, mu1, std::nullopt), signal};
        return reference ? pm::expected_payoff_with_reference(q, report, *reference) : pm::expected_payoff(q, report);
    }, py::arg("n"), py::arg("m"), py::arg("k"), py::arg("mu0"), py::arg("mu1"), py::arg("signal"), py::arg("report"),
       py::arg("reference") = py::none());
    m.def("min_k", &pm::min_k, py::arg("n"), py::arg("m"), py::arg("delta"));
    m.def("calibrate_min_fee", [](double delta, double budget, double total, const std::string& entry, double b) {
        return pm::calibrate_min_fee(problem(delta, budget, total, entry, b));
    }, py::arg("delta"), py::arg("B"), py::arg("M"), py::arg("entry_mode") = "multiple", py::arg("b") = 0.0);
    m.def("subsidy_condition", [](double delta, double budget, double total, double f, const std::string& entry,
                                  double b) {
        const pm::SubsidyVerdict v = pm::subsidy_condition(problem(delta, budget, total, entry, b), f);
        py::dict d;
        d["holds"] = v.holds;
        d["revenue"] = v.revenue;
        d["required"] = v.required;
        d["deficit"] = v.deficit;
        return d;
    }, py::arg("delta"), py::arg("B"), py::arg("M"), py::arg("f"), py::arg("entry_mode") = "multiple",
       py::arg("b") = 0.0);

    // harness, JSON in and out
    m.def("_simulate", [](const std::string& scenario) {
        pm::RunReport rep;
        {
            py::gil_scoped_release release;
            rep = pm::run_scenario(pm::scenario_from_json(nlohmann::json::parse(scenario)));
        }
        return pm::report_to_json(rep).dump();
    });
    m.def("_probe", [](const std::string& scenario) {
        std::vector<pm::DeviationRow> rows;
        {
            py::gil_scoped_release release;
            rows = pm::probe_deviations(pm::scenario_from_json(nlohmann::json::parse(scenario)));
        }
        return pm::deviations_to_json(rows).dump();
    });
    m.def("_sweep_csv", [](const std::string& grid) {
        std::ostringstream out;
        pm::write_sweep_csv(out, pm::sweep_calibration(pm::sweep_grid_from_json(nlohmann::json::parse(grid))));
        return out.str();
    });
}
