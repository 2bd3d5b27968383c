#pragma once
#ifndef TNN_TNN_HPP
#define TNN_TNN_HPP

// Umbrella header for the comparison-based nearest-neighbor library.

#include <tnn/baselines.hpp>
#include <tnn/bench.hpp>
#include <tnn/brute_force.hpp>
#include <tnn/comptree.hpp>
#include <tnn/core.hpp>
#include <tnn/csv.hpp>
#include <tnn/dataset.hpp>
#include <tnn/metric.hpp>
#include <tnn/oracle.hpp>
#include <tnn/rng.hpp>
#include <tnn/synthetic.hpp>
#include <tnn/theory.hpp>

#endif // TNN_TNN_HPP
