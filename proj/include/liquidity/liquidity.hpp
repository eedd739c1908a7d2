#pragma once

#include "liquidity/errors.hpp"
#include "liquidity/numerics.hpp"
#include "liquidity/model.hpp"
#include "liquidity/profile.hpp"
#include "liquidity/infinite_log.hpp"
#include "liquidity/phi_profile.hpp"
#include "liquidity/infinite_hara.hpp"
#include "liquidity/coupled_hjb.hpp"
#include "liquidity/homogenized.hpp"
#include "liquidity/finite_horizon.hpp"
#include "liquidity/dks.hpp"
#include "liquidity/monte_carlo.hpp"
#include "liquidity/config.hpp"
#include "liquidity/report.hpp"
