#pragma once
#include <nomafd/util/types.hpp>
#include <nomafd/scenario.hpp>
#include <nomafd/model.hpp>
#include <nomafd/subcarrier.hpp>
#include <nomafd/dcsolver.hpp>
#include <nomafd/dual.hpp>
#include <nomafd/allocators.hpp>
#include <nomafd/oracle.hpp>
