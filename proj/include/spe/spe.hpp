#pragma once

#include "spe/bounds.hpp"
#include "spe/certify.hpp"
#include "spe/commands.hpp"
#include "spe/config.hpp"
#include "spe/detmodel.hpp"
#include "spe/error.hpp"
#include "spe/estimate.hpp"
#include "spe/io.hpp"
#include "spe/matcore.hpp"
#include "spe/optics.hpp"
#include "spe/optimize.hpp"
#include "spe/qprob.hpp"
#include "spe/state.hpp"
