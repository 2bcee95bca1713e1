#pragma once

#include "mpschwarz/conditions.hpp"
#include "mpschwarz/decomp.hpp"
#include "mpschwarz/experiment.hpp"
#include "mpschwarz/float_format.hpp"
#include "mpschwarz/gmres.hpp"
#include "mpschwarz/grid.hpp"
#include "mpschwarz/linalg.hpp"
#include "mpschwarz/matrix_market.hpp"
#include "mpschwarz/pde.hpp"
#include "mpschwarz/perturb.hpp"
#include "mpschwarz/rounding.hpp"
#include "mpschwarz/scaling.hpp"
#include "mpschwarz/schwarz.hpp"
#include "mpschwarz/sparse.hpp"
