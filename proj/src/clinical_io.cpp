#include "mieval/clinical_io.hpp"

#include <algorithm>

namespace mieval::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

}  // namespace

std::optional<std::string> RawClinicalRecord::value(std::string_view key) const {
    for (const auto& [k, v] : fields) {
        if (k == key) return v;
    }
    return std::nullopt;
}

RawClinicalRecord parse_clinical_text(std::string_view text, std::string case_id) {
    RawClinicalRecord rec;
    rec.case_id = std::move(case_id);
    int line_no = 0;
    for (std::string_view line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw ClinicalParseError(line_no, "expected \"key: value\", no ':' found");
        }
        const std::string key(trim(line.substr(0, colon)));
        const std::string value(trim(line.substr(colon + 1)));
        if (key.empty()) {
            throw ClinicalParseError(line_no, "empty key");
        }
        if (rec.value(key)) {
            throw ClinicalParseError(line_no, "duplicate key \"" + key + "\"");
        }
        rec.fields.emplace_back(key, value);
    }
    return rec;
}

std::vector<RawClinicalRecord> parse_clinical_csv(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]).empty()) {
        throw ClinicalParseError(1, "missing CSV header row");
    }

    auto split_row = [](std::string_view line) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            if (comma == std::string_view::npos) {
                cells.emplace_back(trim(line.substr(start)));
                break;
            }
            cells.emplace_back(trim(line.substr(start, comma - start)));
            start = comma + 1;
        }
        return cells;
    };

    const std::vector<std::string> header = split_row(lines[0]);
    if (header.size() < 2) {
        throw ClinicalParseError(1, "CSV header needs a case-id column plus features");
    }
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (std::count(header.begin(), header.end(), header[i]) > 1) {
            throw ClinicalParseError(1, "duplicate CSV column \"" + header[i] + "\"");
        }
    }

    std::vector<RawClinicalRecord> records;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        const auto cells = split_row(lines[li]);
        if (cells.size() != header.size()) {
            throw ClinicalParseError(static_cast<int>(li + 1),
                                     "row has " + std::to_string(cells.size()) +
                                         " cells, header has " +
                                         std::to_string(header.size()));
        }
        RawClinicalRecord rec;
        rec.case_id = cells[0];
        for (std::size_t c = 1; c < cells.size(); ++c) {
            rec.fields.emplace_back(header[c], cells[c]);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace mieval::io
