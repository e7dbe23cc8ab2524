#pragma once

#include "sfwm/biphoton.hpp"
#include "sfwm/constants.hpp"
#include "sfwm/correlation.hpp"
#include "sfwm/dispersion.hpp"
#include "sfwm/error.hpp"
#include "sfwm/io.hpp"
#include "sfwm/mode_table.hpp"
#include "sfwm/profile.hpp"
#include "sfwm/rates.hpp"
#include "sfwm/simulate.hpp"
#include "sfwm/tags.hpp"
#include "sfwm/version.hpp"
