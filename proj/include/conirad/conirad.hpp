#ifndef CONIRAD_CONIRAD_HPP
#define CONIRAD_CONIRAD_HPP

#include "config.hpp"
#include "core.hpp"
#include "forward.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "gridio.hpp"
#include "inversion.hpp"
#include "phantom.hpp"
#include "quadrature.hpp"
#include "report.hpp"
#include "verify.hpp"

#endif // CONIRAD_CONIRAD_HPP
