#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace shedwatch {

// Calendar date with day resolution. Stored as days since 1970-01-01.
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int year, unsigned month, unsigned day);

    // Parses "YYYY-MM-DD"; throws InvalidArgument on malformed input.
    static Date parse(std::string_view iso);

    std::string iso() const;
    std::chrono::sys_days sys_days() const { return days_; }
    long days_since_epoch() const { return days_.time_since_epoch().count(); }
    int day_of_year() const;

    Date operator+(int days) const { return Date(days_ + std::chrono::days(days)); }
    friend long operator-(const Date& a, const Date& b) {
        return (a.days_ - b.days_).count();
    }
    friend auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days days_{};
};

}  // namespace shedwatch
