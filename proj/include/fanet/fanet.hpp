#pragma once

#include "fanet/error.hpp"
#include "fanet/model.hpp"
#include "fanet/routing.hpp"
#include "fanet/power.hpp"
#include "fanet/linksel.hpp"
#include "fanet/oracle.hpp"
#include "fanet/harness.hpp"
