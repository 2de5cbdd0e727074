#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gq/binio.hpp"
#include "gq/error.hpp"
#include "gq/tumordb.hpp"

namespace gq {

namespace {

void check_range(const Range& r, const char* name, bool allow_zero_lo) {
    const bool lo_ok = allow_zero_lo ? r.lo >= 0.0 : r.lo > 0.0;
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !lo_ok || r.hi < r.lo) {
        throw std::invalid_argument(std::string("invalid range for ") + name + ": [" + std::to_string(r.lo) + ", " +
                                    std::to_string(r.hi) + "]");
    }
}

}  // namespace

void ParamRanges::validate() const {
    check_range(dw, "dw", false);
    check_range(rho, "rho", false);
    check_range(t_end, "tend", false);
}

void SizeFilter::validate() const {
    if (!(min_frac >= 0.0 && min_frac < max_frac && max_frac <= 1.0)) {
        throw std::invalid_argument("size filter needs 0 <= min < max <= 1, got [" + std::to_string(min_frac) + ", " +
                                    std::to_string(max_frac) + "]");
    }
}

RangesConfig parse_ranges(std::string_view text) {
    RangesConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto eq = line.find('=');
        auto fail = [&](const std::string& msg) {
            throw FormatError("ranges file line " + std::to_string(line_no) + ": " + msg);
        };
        if (eq == std::string::npos) fail("expected `key = min max`");
        std::istringstream key_in(line.substr(0, eq));
        std::string key;
        key_in >> key;
        std::istringstream val_in(line.substr(eq + 1));
        Range r;
        std::string extra;
        if (!(val_in >> r.lo >> r.hi) || (val_in >> extra)) fail("expected two numbers after `=`");
        if (key == "dw") {
            cfg.ranges.dw = r;
        } else if (key == "rho") {
            cfg.ranges.rho = r;
        } else if (key == "tend" || key == "t_end") {
            cfg.ranges.t_end = r;
        } else if (key == "size") {
            cfg.size = {r.lo, r.hi};
        } else {
            fail("unknown key `" + key + "`");
        }
    }
    try {
        cfg.ranges.validate();
        cfg.size.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("ranges file: ") + e.what());
    }
    return cfg;
}

RangesConfig load_ranges(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    return parse_ranges({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

}  // namespace gq
