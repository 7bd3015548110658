#pragma once

// Analytic modelling, numerical verification and voltage compensation of
// symmetry-broken linear octupole RF traps.

#include "octotrap/basis.hpp"
#include "octotrap/bem.hpp"
#include "octotrap/common.hpp"
#include "octotrap/compensation.hpp"
#include "octotrap/decompose.hpp"
#include "octotrap/defects.hpp"
#include "octotrap/grid.hpp"
#include "octotrap/io.hpp"
#include "octotrap/layout.hpp"
#include "octotrap/minima.hpp"
#include "octotrap/nelder_mead.hpp"
#include "octotrap/perturbation.hpp"
#include "octotrap/pseudo.hpp"
#include "octotrap/random.hpp"
#include "octotrap/scaling.hpp"
#include "octotrap/scan.hpp"
#include "octotrap/svg.hpp"
#include "octotrap/trap_config.hpp"
#include "octotrap/worker_pool.hpp"
