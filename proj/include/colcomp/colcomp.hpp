#pragma once

#include <colcomp/types.hpp>
#include <colcomp/linalg.hpp>
#include <colcomp/model.hpp>
#include <colcomp/kronmap.hpp>
#include <colcomp/qcqp.hpp>
#include <colcomp/estimator.hpp>
#include <colcomp/collab.hpp>
#include <colcomp/compress.hpp>
#include <colcomp/config.hpp>
#include <colcomp/sim.hpp>
#include <colcomp/checks.hpp>
