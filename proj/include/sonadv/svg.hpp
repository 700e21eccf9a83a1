#ifndef SONADV_SVG_HPP
#define SONADV_SVG_HPP

#include <optional>
#include <string>
#include <vector>

namespace sonadv::harness {

struct ChartGroup {
    std::string label; // e.g. "FGSM (eps=0.1)"
    double clean = 0.0;
    double adversarial = 0.0;
    std::optional<double> defended;
};

// Grouped bar chart of accuracies (clean / adversarial / defended per
// attack). Output is plain SVG with fixed formatting, byte-stable for
// identical inputs.
std::string render_accuracy_chart(const std::vector<ChartGroup>& groups);

} // namespace sonadv::harness

#endif
