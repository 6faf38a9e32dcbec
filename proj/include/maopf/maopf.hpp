#ifndef MAOPF_MAOPF_HPP
#define MAOPF_MAOPF_HPP

#include "archive.hpp"
#include "controls.hpp"
#include "decision.hpp"
#include "encoding.hpp"
#include "knea.hpp"
#include "metrics.hpp"
#include "moea.hpp"
#include "network.hpp"
#include "objectives.hpp"
#include "power_flow.hpp"

#endif
