#ifndef FINAPPROX_FINAPPROX_HPP
#define FINAPPROX_FINAPPROX_HPP

#include <finapprox/core.hpp>
#include <finapprox/hilbert.hpp>
#include <finapprox/resolvent.hpp>
#include <finapprox/analyzer.hpp>
#include <finapprox/galerkin.hpp>
#include <finapprox/scenarios.hpp>
#include <finapprox/io.hpp>

#endif /* FINAPPROX_FINAPPROX_HPP */
