#ifndef SDDESTAB_SVG_HPP
#define SDDESTAB_SVG_HPP

#include <string>
#include <vector>

#include "sddestab/moments.hpp"
#include "sddestab/simulate.hpp"

namespace sddestab {

// Line plot of x(t) with the active mode shown as a background band.
std::string trajectory_svg(const Trajectory& traj, const std::string& title);

// Semilog plot of the moment estimates (log10 scale on the value axis).
std::string moments_svg(const MomentSeries& series, const std::string& title);

} // namespace sddestab

#endif // SDDESTAB_SVG_HPP
