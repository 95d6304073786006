#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ccppm/marglik.hpp"

inline ccppm::SeriesData make_series(std::string name, std::vector<double> y) {
  ccppm::SeriesData s;
  s.name = std::move(name);
  s.y = std::move(y);
  return s;
}
