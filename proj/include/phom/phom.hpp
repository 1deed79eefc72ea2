#pragma once

#include "phom/cluster.hpp"
#include "phom/elliptic.hpp"
#include "phom/errors.hpp"
#include "phom/homogenization.hpp"
#include "phom/io.hpp"
#include "phom/lattice.hpp"
#include "phom/parallel.hpp"
#include "phom/percolation.hpp"
#include "phom/render.hpp"
#include "phom/scheme.hpp"
