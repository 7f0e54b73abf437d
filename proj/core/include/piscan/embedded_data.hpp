#pragma once

#include <string_view>

namespace piscan::embedded {

// Contents of data/nanp_area_codes.txt at build time.
std::string_view nanp_area_codes();

// Contents of data/pile_subset_categories.txt at build time.
std::string_view pile_subset_categories();

}  // namespace piscan::embedded
