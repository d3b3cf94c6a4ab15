#pragma once

#include "qbertrand/bertrand.hpp"
#include "qbertrand/curve_spec.hpp"
#include "qbertrand/curves.hpp"
#include "qbertrand/error.hpp"
#include "qbertrand/frames.hpp"
#include "qbertrand/io.hpp"
#include "qbertrand/quaternion.hpp"
