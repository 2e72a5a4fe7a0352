#pragma once

#include "metamob/types.hpp"

#include <iosfwd>
#include <string>

namespace metamob {

/// Reads the CSV schema: header row with required columns `y`, `trt`,
/// `trial`; every remaining column is a candidate partitioning covariate.
/// Throws std::runtime_error with row/column context on malformed input.
IpdDataset read_csv(std::istream& in);
IpdDataset read_csv_file(const std::string& path);

void write_csv(const IpdDataset& data, std::ostream& out);
void write_csv_file(const IpdDataset& data, const std::string& path);

} // namespace metamob
