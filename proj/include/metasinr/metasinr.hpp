#ifndef METASINR_METASINR_HPP
#define METASINR_METASINR_HPP

#include "metasinr/config.hpp"
#include "metasinr/csv.hpp"
#include "metasinr/geometry.hpp"
#include "metasinr/metadist.hpp"
#include "metasinr/model.hpp"
#include "metasinr/moments.hpp"
#include "metasinr/quadrature.hpp"
#include "metasinr/rng.hpp"
#include "metasinr/simulator.hpp"
#include "metasinr/special.hpp"
#include "metasinr/units.hpp"

#endif
