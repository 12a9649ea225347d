#pragma once

#include "fracreg/fbm.hpp"
#include "fracreg/io.hpp"
#include "fracreg/kernels.hpp"
#include "fracreg/localtime.hpp"
#include "fracreg/montecarlo.hpp"
#include "fracreg/rng.hpp"
#include "fracreg/statistics.hpp"
