#pragma once

#include <string>

namespace sfcnn {

// Calendar dates are converted to flat day numbers on input and back to
// ISO-8601 strings on output; everything in between works on integers.

// Days since 1970-01-01 (negative before). Howard Hinnant's civil algorithm.
int days_from_civil(int y, int m, int d);
void civil_from_days(int days, int& y, int& m, int& d);

// Strict "YYYY-MM-DD". Throws DataError on malformed input.
int parse_date(const std::string& iso);
std::string format_date(int day_number);

}  // namespace sfcnn
