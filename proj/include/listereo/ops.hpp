#ifndef LISTEREO_OPS_HPP_
#define LISTEREO_OPS_HPP_

#include "listereo/ops_basic.hpp"
#include "listereo/ops_conv.hpp"
#include "listereo/ops_spatial.hpp"

#endif  // LISTEREO_OPS_HPP_
