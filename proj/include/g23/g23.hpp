#pragma once

#include "g23/analysis.hpp"
#include "g23/checks.hpp"
#include "g23/dofs.hpp"
#include "g23/experiment.hpp"
#include "g23/fe.hpp"
#include "g23/geometry.hpp"
#include "g23/lattice.hpp"
#include "g23/mesh.hpp"
#include "g23/model.hpp"
#include "g23/polygon.hpp"
#include "g23/potential.hpp"
#include "g23/solver.hpp"
