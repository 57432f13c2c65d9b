#pragma once

#include "pscert/core.hpp"
#include "pscert/grid.hpp"
#include "pscert/system_io.hpp"
#include "pscert/builtin.hpp"
#include "pscert/power_flow.hpp"
#include "pscert/network.hpp"
#include "pscert/equilibrium.hpp"
#include "pscert/dynamics.hpp"
#include "pscert/integrator.hpp"
#include "pscert/scenario.hpp"
#include "pscert/monotone.hpp"
#include "pscert/voltage_analysis.hpp"
#include "pscert/polynomial_system.hpp"
#include "pscert/discrete_iteration.hpp"
#include "pscert/liss.hpp"
#include "pscert/subsystems.hpp"
#include "pscert/small_gain.hpp"
#include "pscert/polyfit.hpp"
#include "pscert/certify.hpp"
