#pragma once

// Serialization of experiment specs and reports: JSON documents, the table
// row CSV and the paired-curve CSV.

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "robin/experiments.hpp"

namespace robin {

nlohmann::json to_json(const ExperimentSpec& spec);

/// Reads the keys present in `doc` on top of `defaults`. Unknown keys are
/// rejected with std::invalid_argument naming the key.
ExperimentSpec experiment_spec_from_json(const nlohmann::json& doc, ExperimentSpec defaults);

nlohmann::json to_json(const ExperimentReport& report);

/// Four significant digits in scientific notation, e.g. 6.127e-04.
std::string format_sci(double value);

/// "gamma,delta,K,alpha_plus,Err_h1,Err_l2"
std::string table_header();
std::string table_row(const ExperimentReport& report);

/// "s,theta_true,theta_reconstructed" followed by one line per sample.
void write_curve_csv(const ExperimentReport& report, std::ostream& out);

}  // namespace robin
