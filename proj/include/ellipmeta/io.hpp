#pragma once

#include <string>

#include "ellipmeta/dataset.hpp"

namespace ellipmeta {

enum class InputFormat { kJson, kCsv };

InputFormat parse_input_format(const std::string& s);
/// From the file extension; JSON unless it ends in ".csv".
InputFormat infer_input_format(const std::string& path);

/// JSON: {"p": int, "studies": [{"id": str, "effects": [...], "cov": [[...]]}]}.
/// Throws kInput on malformed or ragged input and NotPositiveDefiniteError
/// naming the study when a covariance is not SPD.
Dataset ingest_json(const std::string& text);

/// p = 2 only. Header study,x1,x2,sd1,rho12,sd2; U_11 = sd1^2,
/// U_12 = rho12 sd1 sd2, U_22 = sd2^2. Rejects |rho12| > 1 and negative sds.
Dataset ingest_csv(const std::string& text);

/// Reads the file and dispatches on the format. Throws kInput when it
/// cannot be read.
Dataset ingest(const std::string& path, InputFormat format);

/// JSON text accepted by ingest_json; doubles are written round-trip exact.
std::string export_json(const Dataset& data);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace ellipmeta
