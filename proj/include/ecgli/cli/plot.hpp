#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ecgli/pecg/pecg.hpp"

namespace ecgli::cli {

/// SVG with one panel per lead on a near-square grid. The first signal is
/// drawn dashed (ground truth), the others solid. Throws InvalidArgument
/// when shapes differ or no signal is given.
std::string render_signals_svg(const std::vector<pecg::PecgSignal>& signals);

/// Reads the CSVs, renders, and writes `out` only when everything parsed.
void plot_signals(const std::vector<std::filesystem::path>& csv_paths, const std::filesystem::path& out);

}  // namespace ecgli::cli
