#pragma once

#include "fracdg/error.hpp"
#include "fracdg/quadrature.hpp"
#include "fracdg/legendre.hpp"
#include "fracdg/mesh.hpp"
#include "fracdg/parallel.hpp"
#include "fracdg/kernel.hpp"
#include "fracdg/problems.hpp"
#include "fracdg/spatial.hpp"
#include "fracdg/stepper.hpp"
#include "fracdg/analysis.hpp"
#include "fracdg/config.hpp"
#include "fracdg/cli.hpp"
