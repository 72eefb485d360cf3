#pragma once

#include "fairval/coalition.hpp"
#include "fairval/datagen.hpp"
#include "fairval/dataset.hpp"
#include "fairval/error.hpp"
#include "fairval/experiment.hpp"
#include "fairval/gaussian.hpp"
#include "fairval/gp.hpp"
#include "fairval/mechanism.hpp"
#include "fairval/model.hpp"
#include "fairval/oracle.hpp"
#include "fairval/parallel.hpp"
#include "fairval/report.hpp"
#include "fairval/rng.hpp"
#include "fairval/semivalue.hpp"
#include "fairval/valuation.hpp"
