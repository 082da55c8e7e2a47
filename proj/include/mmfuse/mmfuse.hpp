#pragma once

#include "mmfuse/config.hpp"
#include "mmfuse/core.hpp"
#include "mmfuse/emg.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/experiment.hpp"
#include "mmfuse/fusion.hpp"
#include "mmfuse/protocol.hpp"
#include "mmfuse/random.hpp"
#include "mmfuse/reference.hpp"
#include "mmfuse/repl.hpp"
#include "mmfuse/report.hpp"
#include "mmfuse/robot.hpp"
#include "mmfuse/server.hpp"
#include "mmfuse/speech.hpp"
#include "mmfuse/stats.hpp"
