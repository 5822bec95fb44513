#pragma once

#include "hydrolin/error.hpp"
#include "hydrolin/text.hpp"
#include "hydrolin/curves.hpp"
#include "hydrolin/curve_csv.hpp"
#include "hydrolin/circuit.hpp"
#include "hydrolin/equilibrium.hpp"
#include "hydrolin/linearize.hpp"
#include "hydrolin/sim.hpp"
#include "hydrolin/bench.hpp"
#include "hydrolin/config.hpp"
#include "hydrolin/io.hpp"
