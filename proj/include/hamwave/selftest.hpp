// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace hamwave {

/// Runs the built-in oracle suites: reverse-mode gradients against central
/// finite differences, analytic Gram entries against numerical quadrature,
/// and the gradient-to-variational-derivative map against directional
/// derivatives. Returns the number of failed checks.
int selftest(bool verbose);

}  // namespace hamwave
