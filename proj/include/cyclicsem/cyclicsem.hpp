#pragma once

#include "cyclicsem/error.hpp"
#include "cyclicsem/linalg.hpp"
#include "cyclicsem/model.hpp"
#include "cyclicsem/partition.hpp"
#include "cyclicsem/stability.hpp"
#include "cyclicsem/effects.hpp"
#include "cyclicsem/control.hpp"
#include "cyclicsem/estimation.hpp"
#include "cyclicsem/simulation.hpp"
#include "cyclicsem/io.hpp"
#include "cyclicsem/report.hpp"
