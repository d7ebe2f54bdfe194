#pragma once

#include "extragrad/harness.hpp"

namespace extragrad::detail {

/// Writes summaries.csv, trace.csv, histogram.csv, qq.csv, report.json and the
/// SVG histograms into result.config.output_dir, according to config.emit.
/// Appends the written paths to result.emitted_files.
void emit_experiment_files(ExperimentResult& result);

void emit_divergence_files(const DivergenceDemoParams& params, DivergenceTable& table);

/// Throws unless every requested kind is one of the allowed ones.
void validate_emit(const std::vector<std::string>& emit,
                   const std::vector<std::string>& allowed);

/// Shortest exact decimal representation, stable across reruns.
std::string format_double(double value);

}  // namespace extragrad::detail
