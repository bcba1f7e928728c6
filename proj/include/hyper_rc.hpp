#pragma once

#include "hyper_rc/config.hpp"
#include "hyper_rc/datagen.hpp"
#include "hyper_rc/error.hpp"
#include "hyper_rc/esn.hpp"
#include "hyper_rc/experiment.hpp"
#include "hyper_rc/geometry.hpp"
#include "hyper_rc/io.hpp"
#include "hyper_rc/log.hpp"
#include "hyper_rc/metrics.hpp"
#include "hyper_rc/reservoir.hpp"
#include "hyper_rc/rng.hpp"
#include "hyper_rc/theory.hpp"
#include "hyper_rc/trajectory.hpp"
