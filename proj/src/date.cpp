#include "shedwatch/date.hpp"

#include <cstdio>

#include "shedwatch/errors.hpp"

namespace shedwatch {

Date::Date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) {
        throw InvalidArgument("invalid calendar date");
    }
    days_ = std::chrono::sys_days{ymd};
}

Date Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
        throw InvalidArgument("expected YYYY-MM-DD date, got '" + std::string(iso) + "'");
    }
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    const std::string s(iso);
    if (std::sscanf(s.c_str(), "%4d-%2u-%2u", &y, &m, &d) != 3) {
        throw InvalidArgument("expected YYYY-MM-DD date, got '" + s + "'");
    }
    return Date(y, m, d);
}

std::string Date::iso() const {
    const std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

int Date::day_of_year() const {
    const std::chrono::year_month_day ymd{days_};
    const std::chrono::sys_days jan1{ymd.year() / std::chrono::January / 1};
    return int((days_ - jan1).count()) + 1;
}

}  // namespace shedwatch
