#ifndef BODYFIT_BODYFIT_HPP
#define BODYFIT_BODYFIT_HPP

#include "bodyfit/error.hpp"
#include "bodyfit/face_grid.hpp"
#include "bodyfit/geometry.hpp"
#include "bodyfit/integrator.hpp"
#include "bodyfit/io.hpp"
#include "bodyfit/kernels.hpp"
#include "bodyfit/lattice.hpp"
#include "bodyfit/metrics.hpp"
#include "bodyfit/neighbors.hpp"
#include "bodyfit/packing.hpp"
#include "bodyfit/parallel.hpp"
#include "bodyfit/pipeline.hpp"
#include "bodyfit/sampling.hpp"
#include "bodyfit/sdf.hpp"
#include "bodyfit/shapes.hpp"
#include "bodyfit/sph.hpp"
#include "bodyfit/vec.hpp"
#include "bodyfit/winding.hpp"

#endif  // BODYFIT_BODYFIT_HPP
