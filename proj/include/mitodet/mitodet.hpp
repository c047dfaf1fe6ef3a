#pragma once

#include "mitodet/annotation.hpp"
#include "mitodet/errors.hpp"
#include "mitodet/evaluation.hpp"
#include "mitodet/geometry.hpp"
#include "mitodet/imaging.hpp"
#include "mitodet/losses.hpp"
#include "mitodet/random.hpp"
#include "mitodet/raster.hpp"
#include "mitodet/tiling.hpp"
#include "mitodet/types.hpp"
