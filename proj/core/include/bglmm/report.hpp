#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "bglmm/bahadur.hpp"
#include "bglmm/compare.hpp"
#include "bglmm/fit.hpp"
#include "bglmm/gee.hpp"
#include "bglmm/simulate.hpp"

namespace bglmm {

// Context echoed into every JSON document so runs are self-describing and
// byte-reproducible: command name, seed, input description, option strings.
struct RunContext {
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // e.g. data path, columns
  std::map<std::string, std::string> options;  // stringified flags
};

// JSON documents use sorted keys and round-trip-exact number formatting, so
// identical runs produce identical bytes.
std::string fit_result_json(const FitResult& fit, const RunContext& ctx);
std::string bahadur_fit_json(const BahadurFit& fit, const RunContext& ctx);
std::string gee_result_json(const GeeResult& fit, const RunContext& ctx);
std::string simulation_report_json(const SimulationReport& report,
                                   const RunContext& ctx);
std::string tau_curve_json(
    const std::map<double, std::vector<TauCurvePoint>>& curves_by_phi,
    const RunContext& ctx);
std::string compare_report_json(const CompareReport& report,
                                const RunContext& ctx);

// Aligned plain-text renderings for the terminal.
std::string fit_result_text(const FitResult& fit);
std::string bahadur_fit_text(const BahadurFit& fit);
std::string gee_result_text(const GeeResult& fit);
std::string simulation_report_text(const SimulationReport& report);
std::string tau_curve_text(
    const std::map<double, std::vector<TauCurvePoint>>& curves_by_phi);
std::string compare_report_text(const CompareReport& report);

}  // namespace bglmm
