#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mieval/errors.hpp"

namespace mieval::io {

/// Line-numbered failure while parsing a clinical information file.
class ClinicalParseError : public DataError {
public:
    ClinicalParseError(int line, const std::string& msg)
        : DataError("line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

/// Ordered (key, raw value) pairs from one patient's clinical file.
struct RawClinicalRecord {
    std::string case_id;
    std::vector<std::pair<std::string, std::string>> fields;

    std::optional<std::string> value(std::string_view key) const;
};

/// Parses line-oriented "key: value" text. Blank lines are ignored; keys must
/// be unique; values keep internal spaces but lose surrounding whitespace.
RawClinicalRecord parse_clinical_text(std::string_view text, std::string case_id = {});

/// Alternate ingestion path: one CSV row per case with a header row. The
/// first column is the case id, remaining columns become record keys.
std::vector<RawClinicalRecord> parse_clinical_csv(std::string_view text);

}  // namespace mieval::io
